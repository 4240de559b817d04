#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "tvqp/async_schedule.hpp"
#include "tvqp/oracle.hpp"
#include "tvqp/qp_model.hpp"
#include "tvqp/types.hpp"

namespace tvqp {

/// γ_z for interval z given its aggregate.
using GammaPolicy = std::function<double(Index z, const AggregateObjective& agg)>;

GammaPolicy fixed_gamma(double gamma);

/// Oracle data for one interval: the sampled-problem minimizer x*(t_z) and the
/// stationary set of the aggregate. Either may be absent.
struct IntervalOracle {
    std::optional<Vector> x_star;
    std::optional<StationarySet> stationary;
};

using OracleProvider = std::function<IntervalOracle(Index z, const AggregateObjective& agg)>;

/// x*(t_z) of the true sampled problem f(·;t_z) plus the aggregate's
/// stationary set.
OracleProvider default_oracle(const TimeVaryingQP& qp, const StationaryOptions& options = {});

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct IterationRow {
    std::int64_t k = 0;
    Index z = 0;
    double t_z = 0.0;
    double cost = 0.0;      // g(x(k); t_z)
    double s_norm = 0.0;    // ‖x(k+1) − x(k)‖
    double beta = 0.0;      // Σ_{τ=k−B}^{k−1} ‖s(τ)‖²
    double alpha = kMissing;
    double err_opt = kMissing;
};

struct IntervalRow {
    Index z = 0;
    double t_z = 0.0;
    std::vector<double> theta;
    double q_hat_fingerprint = 0.0;  // Frobenius norm of Q̂
    double gamma = 0.0;
    std::int64_t begin = 0;          // η_{z−1}
    std::int64_t end = 0;            // η_z
    double end_cost = 0.0;           // g(x(η_z); t_z)
    double end_alpha = kMissing;
    double end_err = kMissing;       // ‖x*(t_z) − x(η_z)‖
    Vector end_state;
};

struct RunTrace {
    std::int64_t B = 1;
    std::vector<IterationRow> rows;
    std::vector<IntervalRow> intervals;
    std::vector<AggregateObjective> aggregates;
    std::vector<Vector> states;  // x(0..η_T) when recorded
    Vector final_state;
};

struct EngineOptions {
    GradientMode mode = GradientMode::row_stacked;
    bool record_states = false;
    OracleProvider oracle;  // optional
};

/// Per-agent local copies xⁱ and the stamps τʲᵢ of their blocks.
struct NetworkState {
    Vector x;                  // true state
    std::vector<Vector> views;
    std::vector<std::vector<std::int64_t>> stamps;
    std::vector<Vector> history;              // ring of the last B true states
    std::vector<std::int64_t> history_stamp;  // iteration stored in each slot
};

NetworkState make_network_state(const BlockPartition& partition, const Vector& x0, std::int64_t B);

/// One iteration k: store x(k), apply deliveries, then every computing agent
/// applies Ω_i on its own view. Returns s(k).
Vector step(std::int64_t k, const AggregateObjective& agg, const Box& box,
            const AsyncSchedule& schedule, NetworkState& state, double gamma, GradientMode mode);

RunTrace run(const TimeVaryingQP& qp, const SamplingPlan& plan, const AsyncSchedule& schedule,
             const GammaPolicy& gamma, const Vector& x0, const EngineOptions& options = {});

/// x0 uniformly in [lo, hi]ⁿ ∩ box.
Vector random_initial_state(const Box& box, std::uint64_t seed, std::optional<double> lo = std::nullopt,
                            std::optional<double> hi = std::nullopt);

struct KhatResult {
    std::int64_t k = 0;  // absolute iteration index, or κ_z when exhausted
    bool exhausted = false;
};

/// First k ≥ η_{z−1} + B in interval z with ‖s(k)‖ < threshold; κ_z when none.
KhatResult estimate_khat(const RunTrace& trace, Index z, double threshold);

}  // namespace tvqp
