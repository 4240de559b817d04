#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tvqp/qp_model.hpp"
#include "tvqp/types.hpp"

namespace tvqp {

/// Per-agent sampling sets on the grid {ℓ·t_s}. Times are stored as integer
/// grid indices so membership tests are exact.
struct SamplingPlan {
    double t_s = 1.0;
    double horizon = 0.0;
    std::vector<std::vector<std::int64_t>> per_agent;  // sorted, each starts at 0
    std::vector<std::int64_t> union_grid;              // sorted union of per_agent
    double delta = 0.0;

    Index agents() const { return static_cast<Index>(per_agent.size()); }
    /// Number of sample events (intervals) T+1.
    Index events() const { return static_cast<Index>(union_grid.size()); }
    double time(Index z) const { return static_cast<double>(union_grid[static_cast<std::size_t>(z)]) * t_s; }
    /// θ_i(t_z) for all agents.
    SampleState state(Index z) const;
};

/// Each agent samples every grid point in [0, horizon] with probability
/// p_sample[i]; t = 0 is always sampled.
SamplingPlan generate_sampling(std::uint64_t seed, double t_s, double horizon,
                               const std::vector<double>& p_sample);

/// Plan from explicit grid indices (index 0 is inserted when missing).
SamplingPlan make_sampling_plan(double t_s, double horizon,
                                std::vector<std::vector<std::int64_t>> per_agent);

/// Agent `receiver` overwrites its copy of block `sender` with the value that
/// block had at iteration `stamp`.
struct Delivery {
    std::int32_t receiver = 0;
    std::int32_t sender = 0;
    std::int64_t stamp = 0;
};

struct AsyncSchedule {
    Index agents = 1;
    std::int64_t B = 1;
    std::vector<std::int64_t> kappa;
    std::vector<std::int64_t> eta;  // eta[z] = kappa[0] + ... + kappa[z]
    std::vector<std::vector<std::int32_t>> compute;     // agents computing at k
    std::vector<std::vector<Delivery>> deliveries;      // deliveries applied at k
    std::vector<std::vector<bool>> mask;                // mask[i][j]: i needs block j
    std::uint64_t seed = 0;

    std::int64_t total_iterations() const { return eta.empty() ? 0 : eta.back(); }
    Index intervals() const { return static_cast<Index>(kappa.size()); }
    /// First iteration of interval z (η_{z−1}, with η_{−1} = 0).
    std::int64_t interval_begin(Index z) const {
        return z == 0 ? 0 : eta[static_cast<std::size_t>(z - 1)];
    }
    std::int64_t interval_end(Index z) const { return eta[static_cast<std::size_t>(z)]; }
};

struct ScheduleParams {
    Index agents = 1;
    std::int64_t B = 1;
    std::vector<std::int64_t> kappa;
    std::vector<double> p_update;  // one per agent
    std::vector<double> p_comm;    // one per agent (sender side)
    /// Optional communication mask; all-to-all when empty.
    std::vector<std::vector<bool>> mask;
};

/// Empty schedule skeleton with kappa/eta filled and no events.
AsyncSchedule make_empty_schedule(Index agents, std::int64_t B, std::vector<std::int64_t> kappa);

/// Random computations and deliveries with forced events keeping every agent
/// active and every copy younger than B iterations.
AsyncSchedule generate_schedule(std::uint64_t seed, const ScheduleParams& params);

/// B = 1, every agent computes and receives fresh copies at every k.
AsyncSchedule synchronous_schedule(Index agents, std::vector<std::int64_t> kappa);

struct ScheduleViolation {
    int condition = 0;  // 1: idle window, 2: stale copy or out-of-window stamp
    Index agent = 0;
    Index counterpart = -1;
    std::int64_t k = 0;
    std::string message;
};

std::vector<ScheduleViolation> validate_schedule(const AsyncSchedule& s);

/// Columns: k,agent,event_type,counterpart,tau.
void write_schedule_csv(std::ostream& out, const AsyncSchedule& s);

}  // namespace tvqp
