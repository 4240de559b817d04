#include "tvqp/bcd_engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace tvqp {

GammaPolicy fixed_gamma(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw ConfigError("step size gamma must be positive and finite");
    }
    return [gamma](Index, const AggregateObjective&) { return gamma; };
}

OracleProvider default_oracle(const TimeVaryingQP& qp, const StationaryOptions& options) {
    return [qp, options](Index, const AggregateObjective& agg) {
        IntervalOracle out;
        const double t = agg.t_z();
        out.x_star = solve_strongly_convex(qp.q(t), qp.r(t), qp.box(), options.tol).x;
        out.stationary = find_stationary_set(agg, qp.box(), options);
        return out;
    };
}

NetworkState make_network_state(const BlockPartition& partition, const Vector& x0, std::int64_t B) {
    if (x0.size() != partition.dim()) {
        throw ConfigError("initial state has the wrong dimension");
    }
    const auto n_agents = static_cast<std::size_t>(partition.agents());
    NetworkState st;
    st.x = x0;
    st.views.assign(n_agents, x0);
    st.stamps.assign(n_agents, std::vector<std::int64_t>(n_agents, 0));
    st.history.assign(static_cast<std::size_t>(B), x0);
    st.history_stamp.assign(static_cast<std::size_t>(B), -1);
    return st;
}

Vector step(std::int64_t k, const AggregateObjective& agg, const Box& box,
            const AsyncSchedule& schedule, NetworkState& state, double gamma, GradientMode mode) {
    const BlockPartition& part = agg.partition;
    const std::int64_t B = schedule.B;
    const auto slot = static_cast<std::size_t>(k % B);
    state.history[slot] = state.x;
    state.history_stamp[slot] = k;

    for (const auto& d : schedule.deliveries[static_cast<std::size_t>(k)]) {
        const auto src = static_cast<std::size_t>(d.stamp % B);
        if (d.stamp < 0 || d.stamp > k || state.history_stamp[src] != d.stamp) {
            std::ostringstream msg;
            msg << "delivery at k=" << k << " references iteration " << d.stamp
                << " outside the delay window";
            throw ConfigError(msg.str());
        }
        const Index off = part.offset(d.sender);
        const Index len = part.size(d.sender);
        state.views[static_cast<std::size_t>(d.receiver)].segment(off, len) =
            state.history[src].segment(off, len);
        state.stamps[static_cast<std::size_t>(d.receiver)][static_cast<std::size_t>(d.sender)] = d.stamp;
    }

    const Vector before = state.x;
    const auto& computing = schedule.compute[static_cast<std::size_t>(k)];
    std::vector<Vector> updates;
    updates.reserve(computing.size());
    for (const auto a : computing) {
        const Vector& view = state.views[static_cast<std::size_t>(a)];
        const Index off = part.offset(a);
        const Index len = part.size(a);
        const Vector dir = eval_block_direction(agg, a, view, mode);
        updates.push_back(project_box(box, part, a, view.segment(off, len) - gamma * dir));
    }
    for (std::size_t u = 0; u < computing.size(); ++u) {
        const Index a = computing[u];
        const Index off = part.offset(a);
        const Index len = part.size(a);
        state.x.segment(off, len) = updates[u];
        state.views[static_cast<std::size_t>(a)].segment(off, len) = updates[u];
        state.stamps[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] = k + 1;
    }
    return state.x - before;
}

RunTrace run(const TimeVaryingQP& qp, const SamplingPlan& plan, const AsyncSchedule& schedule,
             const GammaPolicy& gamma, const Vector& x0, const EngineOptions& options) {
    if (schedule.intervals() != plan.events()) {
        std::ostringstream msg;
        msg << "schedule has " << schedule.intervals() << " intervals but the sampling plan has "
            << plan.events() << " sample events";
        throw ConfigError(msg.str());
    }
    if (schedule.agents != qp.agents() || plan.agents() != qp.agents()) {
        throw ConfigError("schedule, sampling plan and problem disagree on the number of agents");
    }
    if (!qp.box().contains(x0, 0.0)) {
        throw ConfigError("initial state lies outside the box");
    }
    if (!gamma) {
        throw ConfigError("no step-size policy supplied");
    }

    RunTrace trace;
    trace.B = schedule.B;
    trace.rows.reserve(static_cast<std::size_t>(schedule.total_iterations()));
    NetworkState state = make_network_state(qp.partition(), x0, schedule.B);
    std::deque<double> recent_sq;  // ‖s(τ)‖² for the last B iterations
    double beta = 0.0;
    if (options.record_states) {
        trace.states.push_back(x0);
    }

    for (Index z = 0; z < plan.events(); ++z) {
        AggregateObjective agg = build_aggregate(qp, plan.state(z));
        const double gz = gamma(z, agg);
        if (!(gz > 0.0) || !std::isfinite(gz)) {
            std::ostringstream msg;
            msg << "step-size policy returned " << gz << " for interval " << z;
            throw ConfigError(msg.str());
        }
        const IntervalOracle oracle = options.oracle ? options.oracle(z, agg) : IntervalOracle{};

        IntervalRow iv;
        iv.z = z;
        iv.t_z = agg.t_z();
        iv.theta = agg.sample_state.theta;
        iv.q_hat_fingerprint = agg.q_hat.norm();
        iv.gamma = gz;
        iv.begin = schedule.interval_begin(z);
        iv.end = schedule.interval_end(z);

        auto alpha_at = [&](const Vector& x, double cost) {
            return oracle.stationary ? cost - nearest_stationary(*oracle.stationary, x).cost : kMissing;
        };
        auto err_at = [&](const Vector& x) {
            return oracle.x_star ? (*oracle.x_star - x).norm() : kMissing;
        };

        for (std::int64_t k = iv.begin; k < iv.end; ++k) {
            IterationRow row;
            row.k = k;
            row.z = z;
            row.t_z = iv.t_z;
            row.cost = eval_cost(agg, state.x);
            row.alpha = alpha_at(state.x, row.cost);
            row.err_opt = err_at(state.x);
            row.beta = beta;

            const Vector s = step(k, agg, qp.box(), schedule, state, gz, options.mode);
            row.s_norm = s.norm();
            trace.rows.push_back(row);

            recent_sq.push_back(row.s_norm * row.s_norm);
            if (static_cast<std::int64_t>(recent_sq.size()) > schedule.B) {
                recent_sq.pop_front();
            }
            beta = 0.0;
            for (const double v : recent_sq) {
                beta += v;
            }
            if (options.record_states) {
                trace.states.push_back(state.x);
            }
        }

        iv.end_cost = eval_cost(agg, state.x);
        iv.end_alpha = alpha_at(state.x, iv.end_cost);
        iv.end_err = err_at(state.x);
        iv.end_state = state.x;
        trace.intervals.push_back(std::move(iv));
        trace.aggregates.push_back(std::move(agg));
    }
    trace.final_state = state.x;
    return trace;
}

Vector random_initial_state(const Box& box, std::uint64_t seed, std::optional<double> lo,
                            std::optional<double> hi) {
    Rng rng = make_rng(seed, 0x1a17);
    Vector x(box.dim());
    for (Index j = 0; j < box.dim(); ++j) {
        const double a = lo ? std::max(*lo, box.lo()(j)) : box.lo()(j);
        const double b = hi ? std::min(*hi, box.hi()(j)) : box.hi()(j);
        if (!(a <= b)) {
            throw ConfigError("initial-state range does not intersect the box");
        }
        x(j) = uniform(rng, a, b);
    }
    return x;
}

KhatResult estimate_khat(const RunTrace& trace, Index z, double threshold) {
    if (z < 0 || z >= static_cast<Index>(trace.intervals.size())) {
        throw ConfigError("estimate_khat: interval index out of range");
    }
    const IntervalRow& iv = trace.intervals[static_cast<std::size_t>(z)];
    for (std::int64_t k = iv.begin + trace.B; k < iv.end; ++k) {
        if (trace.rows[static_cast<std::size_t>(k)].s_norm < threshold) {
            return {k, false};
        }
    }
    return {iv.end - iv.begin, true};
}

}  // namespace tvqp
