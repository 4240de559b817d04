#include "tvqp/async_schedule.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace tvqp {

namespace {

constexpr std::uint64_t kSamplingStream = 1ull << 32;
constexpr std::uint64_t kComputeStream = 2ull << 32;
constexpr std::uint64_t kCommStream = 3ull << 32;

double theta_at(const std::vector<std::int64_t>& set, std::int64_t grid, double t_s) {
    const auto it = std::upper_bound(set.begin(), set.end(), grid);
    return static_cast<double>(*(it - 1)) * t_s;
}

void finish_plan(SamplingPlan& plan) {
    std::vector<std::int64_t> all;
    for (auto& set : plan.per_agent) {
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
        if (set.empty() || set.front() != 0) {
            set.insert(set.begin(), 0);
        }
        all.insert(all.end(), set.begin(), set.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    plan.union_grid = std::move(all);

    plan.delta = 0.0;
    for (const auto& set : plan.per_agent) {
        for (std::size_t z = 0; z + 1 < plan.union_grid.size(); ++z) {
            const double jump = theta_at(set, plan.union_grid[z + 1], plan.t_s) -
                                theta_at(set, plan.union_grid[z], plan.t_s);
            plan.delta = std::max(plan.delta, std::abs(jump));
        }
    }
}

void check_probability(double p, const char* what, bool allow_zero) {
    const bool ok = allow_zero ? (p >= 0.0 && p <= 1.0) : (p > 0.0 && p <= 1.0);
    if (!ok) {
        throw ConfigError(std::string(what) + (allow_zero ? " must lie in [0, 1]" : " must lie in (0, 1]") +
                          ", got " + std::to_string(p));
    }
}

}  // namespace

SampleState SamplingPlan::state(Index z) const {
    const std::int64_t grid = union_grid[static_cast<std::size_t>(z)];
    SampleState s;
    s.t_z = static_cast<double>(grid) * t_s;
    s.theta.reserve(per_agent.size());
    for (const auto& set : per_agent) {
        s.theta.push_back(theta_at(set, grid, t_s));
    }
    return s;
}

SamplingPlan generate_sampling(std::uint64_t seed, double t_s, double horizon,
                               const std::vector<double>& p_sample) {
    if (!(t_s > 0.0)) {
        throw ConfigError("sampling period t_s must be positive");
    }
    if (horizon < t_s) {
        throw ConfigError("horizon shorter than one sampling period: no sample events");
    }
    if (p_sample.empty()) {
        throw ConfigError("p_sample needs one entry per agent");
    }
    const auto last = static_cast<std::int64_t>(std::floor(horizon / t_s + 1e-9));
    SamplingPlan plan;
    plan.t_s = t_s;
    plan.horizon = horizon;
    plan.per_agent.resize(p_sample.size());
    for (std::size_t i = 0; i < p_sample.size(); ++i) {
        check_probability(p_sample[i], "p_sample", false);
        Rng rng = make_rng(seed, kSamplingStream + i);
        auto& set = plan.per_agent[i];
        set.push_back(0);
        for (std::int64_t l = 1; l <= last; ++l) {
            if (bernoulli(rng, p_sample[i])) {
                set.push_back(l);
            }
        }
    }
    finish_plan(plan);
    return plan;
}

SamplingPlan make_sampling_plan(double t_s, double horizon,
                                std::vector<std::vector<std::int64_t>> per_agent) {
    if (!(t_s > 0.0)) {
        throw ConfigError("sampling period t_s must be positive");
    }
    if (per_agent.empty()) {
        throw ConfigError("sampling plan needs at least one agent");
    }
    SamplingPlan plan;
    plan.t_s = t_s;
    plan.horizon = horizon;
    plan.per_agent = std::move(per_agent);
    for (const auto& set : plan.per_agent) {
        for (const auto g : set) {
            if (g < 0) {
                throw ConfigError("sampling grid indices must be nonnegative");
            }
        }
    }
    finish_plan(plan);
    return plan;
}

AsyncSchedule make_empty_schedule(Index agents, std::int64_t B, std::vector<std::int64_t> kappa) {
    if (agents < 1) {
        throw ConfigError("schedule needs at least one agent");
    }
    if (B < 1) {
        throw ConfigError("delay bound B must be >= 1");
    }
    if (kappa.empty()) {
        throw ConfigError("kappa must list at least one interval");
    }
    AsyncSchedule s;
    s.agents = agents;
    s.B = B;
    std::int64_t total = 0;
    for (const auto kz : kappa) {
        if (kz < 1) {
            throw ConfigError("every kappa_z must be >= 1");
        }
        total += kz;
        s.eta.push_back(total);
    }
    s.kappa = std::move(kappa);
    s.compute.assign(static_cast<std::size_t>(total), {});
    s.deliveries.assign(static_cast<std::size_t>(total), {});
    s.mask.assign(static_cast<std::size_t>(agents), std::vector<bool>(static_cast<std::size_t>(agents), true));
    return s;
}

AsyncSchedule generate_schedule(std::uint64_t seed, const ScheduleParams& params) {
    AsyncSchedule s = make_empty_schedule(params.agents, params.B, params.kappa);
    s.seed = seed;
    const auto n_agents = static_cast<std::size_t>(params.agents);
    if (params.p_update.size() != n_agents || params.p_comm.size() != n_agents) {
        throw ConfigError("p_update and p_comm need one entry per agent");
    }
    for (std::size_t i = 0; i < n_agents; ++i) {
        check_probability(params.p_update[i], "p_update", true);
        check_probability(params.p_comm[i], "p_comm", true);
    }
    if (!params.mask.empty()) {
        if (params.mask.size() != n_agents) {
            throw ConfigError("communication mask must be N x N");
        }
        for (const auto& row : params.mask) {
            if (row.size() != n_agents) {
                throw ConfigError("communication mask must be N x N");
            }
        }
        s.mask = params.mask;
    }
    const std::int64_t total = s.total_iterations();
    const std::int64_t B = params.B;

    for (std::size_t i = 0; i < n_agents; ++i) {
        Rng rng = make_rng(seed, kComputeStream + i);
        std::int64_t idle = 0;
        for (std::int64_t k = 0; k < total; ++k) {
            const bool random = bernoulli(rng, params.p_update[i]);
            if (random || idle >= B - 1) {
                s.compute[static_cast<std::size_t>(k)].push_back(static_cast<std::int32_t>(i));
                idle = 0;
            } else {
                ++idle;
            }
        }
    }

    for (std::size_t i = 0; i < n_agents; ++i) {
        for (std::size_t j = 0; j < n_agents; ++j) {
            if (i == j || !s.mask[i][j]) {
                continue;
            }
            Rng rng = make_rng(seed, kCommStream + i * n_agents + j);
            std::int64_t held = 0;
            for (std::int64_t k = 0; k < total; ++k) {
                const bool random = bernoulli(rng, params.p_comm[j]);
                std::int64_t stamp = -1;
                if (k - held >= B || B == 1) {
                    stamp = k;
                } else if (random) {
                    stamp = uniform_int(rng, std::max(held, k - B + 1), k);
                }
                if (stamp >= 0) {
                    held = stamp;
                    s.deliveries[static_cast<std::size_t>(k)].push_back(
                        {static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), stamp});
                }
            }
        }
    }
    return s;
}

AsyncSchedule synchronous_schedule(Index agents, std::vector<std::int64_t> kappa) {
    AsyncSchedule s = make_empty_schedule(agents, 1, std::move(kappa));
    const std::int64_t total = s.total_iterations();
    for (std::int64_t k = 0; k < total; ++k) {
        auto& comp = s.compute[static_cast<std::size_t>(k)];
        auto& del = s.deliveries[static_cast<std::size_t>(k)];
        for (Index i = 0; i < agents; ++i) {
            comp.push_back(static_cast<std::int32_t>(i));
            for (Index j = 0; j < agents; ++j) {
                if (i != j && k > 0) {
                    del.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), k});
                }
            }
        }
    }
    return s;
}

std::vector<ScheduleViolation> validate_schedule(const AsyncSchedule& s) {
    std::vector<ScheduleViolation> out;
    const std::int64_t total = static_cast<std::int64_t>(s.compute.size());
    const auto n = static_cast<std::size_t>(s.agents);
    const std::int64_t B = s.B;

    // Part 1: one report per maximal idle run that covers a full window.
    std::vector<std::int64_t> run_start(n, 0);
    std::vector<std::int64_t> last_compute(n, -1);
    auto close_run = [&](std::size_t i, std::int64_t end) {
        const std::int64_t start = last_compute[i] + 1;
        if (end - start >= B) {
            std::ostringstream msg;
            msg << "agent " << i << " idle for " << (end - start) << " iterations from k=" << start;
            out.push_back({1, static_cast<Index>(i), -1, start, msg.str()});
        }
    };
    for (std::int64_t k = 0; k < total; ++k) {
        for (const auto a : s.compute[static_cast<std::size_t>(k)]) {
            const auto i = static_cast<std::size_t>(a);
            close_run(i, k);
            last_compute[i] = k;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        close_run(i, total);
    }

    // Part 2: replay held stamps.
    std::vector<std::vector<std::int64_t>> held(n, std::vector<std::int64_t>(n, 0));
    std::vector<std::vector<bool>> stale(n, std::vector<bool>(n, false));
    for (std::int64_t k = 0; k < total; ++k) {
        const std::int64_t lo = std::max<std::int64_t>(0, k - B + 1);
        for (const auto& d : s.deliveries[static_cast<std::size_t>(k)]) {
            const auto i = static_cast<std::size_t>(d.receiver);
            const auto j = static_cast<std::size_t>(d.sender);
            if (d.stamp < lo || d.stamp > k) {
                std::ostringstream msg;
                msg << "delivery " << j << "->" << i << " at k=" << k << " stamped " << d.stamp
                    << " outside [" << lo << ", " << k << "]";
                out.push_back({2, static_cast<Index>(i), static_cast<Index>(j), k, msg.str()});
                stale[i][j] = true;
            }
            held[i][j] = d.stamp;
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j || !s.mask[i][j]) {
                    continue;
                }
                if (held[i][j] < lo) {
                    if (!stale[i][j]) {
                        std::ostringstream msg;
                        msg << "agent " << i << " copy of block " << j << " has age "
                            << (k - held[i][j]) << " at k=" << k;
                        out.push_back({2, static_cast<Index>(i), static_cast<Index>(j), k, msg.str()});
                        stale[i][j] = true;
                    }
                } else {
                    stale[i][j] = false;
                }
            }
        }
    }
    return out;
}

void write_schedule_csv(std::ostream& out, const AsyncSchedule& s) {
    out << "k,agent,event_type,counterpart,tau\n";
    const std::int64_t total = s.total_iterations();
    for (std::int64_t k = 0; k < total; ++k) {
        for (const auto& d : s.deliveries[static_cast<std::size_t>(k)]) {
            out << k << ',' << d.receiver << ",deliver," << d.sender << ',' << d.stamp << '\n';
        }
        for (const auto a : s.compute[static_cast<std::size_t>(k)]) {
            out << k << ',' << a << ",compute,,\n";
        }
    }
}

}  // namespace tvqp
