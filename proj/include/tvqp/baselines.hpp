#pragma once

#include <vector>

#include "tvqp/async_schedule.hpp"
#include "tvqp/bcd_engine.hpp"
#include "tvqp/qp_model.hpp"

namespace tvqp {

/// Dense synchronous projected gradient x⁺ = Π[x − γ(Q̂x + r̂)] with κ_z
/// iterations per sample event. Shares the RunTrace schema (B = 1).
RunTrace run_sync_bcd(const TimeVaryingQP& qp, const SamplingPlan& plan,
                      const std::vector<std::int64_t>& kappa, double gamma, const Vector& x0,
                      GradientMode mode = GradientMode::row_stacked,
                      const OracleProvider& oracle = {}, bool record_states = false);

struct ConsensusConfig {
    Matrix weights;  // doubly stochastic N×N
    double gamma = 1e-3;
};

enum class Topology { complete, ring };

Topology parse_topology(const std::string& name);

/// Metropolis weights on the given graph (uniform 1/N on the complete graph).
Matrix metropolis_weights(Index agents, Topology topology);

/// Throws ConfigError unless weights are nonnegative with unit row and
/// column sums (1e−12).
void validate_weights(const Matrix& w);

/// Each agent i keeps a full copy y_i and iterates
/// y_i ← Π[Σ_j w_ij y_j − γ∇f_i(y_i)], f_i = (1/N) f(·; θ_i(t_z)).
/// The reported state is the average copy.
RunTrace run_consensus(const TimeVaryingQP& qp, const SamplingPlan& plan,
                       const ConsensusConfig& config, const std::vector<std::int64_t>& kappa,
                       const Vector& x0, const OracleProvider& oracle = {},
                       double* max_disagreement = nullptr);

}  // namespace tvqp
