#include "tvqp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tvqp {

namespace {

void check_kappa(const SamplingPlan& plan, const std::vector<std::int64_t>& kappa) {
    if (static_cast<Index>(kappa.size()) != plan.events()) {
        throw ConfigError("kappa needs one entry per sample event");
    }
    for (const auto kz : kappa) {
        if (kz < 1) {
            throw ConfigError("every kappa_z must be >= 1");
        }
    }
}

// Shared bookkeeping for the two baselines: cost, α, error, β over B = 1.
class TraceBuilder {
public:
    TraceBuilder(RunTrace& trace, const OracleProvider& oracle) : trace_(trace), oracle_(oracle) {
        trace_.B = 1;
    }

    void begin_interval(Index z, std::int64_t begin, std::int64_t end, double gamma,
                        const AggregateObjective& agg) {
        current_ = oracle_ ? oracle_(z, agg) : IntervalOracle{};
        iv_ = IntervalRow{};
        iv_.z = z;
        iv_.t_z = agg.t_z();
        iv_.theta = agg.sample_state.theta;
        iv_.q_hat_fingerprint = agg.q_hat.norm();
        iv_.gamma = gamma;
        iv_.begin = begin;
        iv_.end = end;
    }

    IterationRow row(std::int64_t k, const AggregateObjective& agg, const Vector& x) const {
        IterationRow r;
        r.k = k;
        r.z = iv_.z;
        r.t_z = iv_.t_z;
        r.cost = eval_cost(agg, x);
        r.alpha = alpha(x, r.cost);
        r.err_opt = current_.x_star ? (*current_.x_star - x).norm() : kMissing;
        r.beta = last_sq_;
        return r;
    }

    void push(IterationRow r, double s_norm) {
        r.s_norm = s_norm;
        last_sq_ = s_norm * s_norm;
        trace_.rows.push_back(r);
    }

    void end_interval(const AggregateObjective& agg, const Vector& x) {
        iv_.end_cost = eval_cost(agg, x);
        iv_.end_alpha = alpha(x, iv_.end_cost);
        iv_.end_err = current_.x_star ? (*current_.x_star - x).norm() : kMissing;
        iv_.end_state = x;
        trace_.intervals.push_back(iv_);
        trace_.aggregates.push_back(agg);
    }

private:
    double alpha(const Vector& x, double cost) const {
        return current_.stationary ? cost - nearest_stationary(*current_.stationary, x).cost : kMissing;
    }

    RunTrace& trace_;
    const OracleProvider& oracle_;
    IntervalOracle current_;
    IntervalRow iv_;
    double last_sq_ = 0.0;
};

}  // namespace

RunTrace run_sync_bcd(const TimeVaryingQP& qp, const SamplingPlan& plan,
                      const std::vector<std::int64_t>& kappa, double gamma, const Vector& x0,
                      GradientMode mode, const OracleProvider& oracle, bool record_states) {
    check_kappa(plan, kappa);
    if (!(gamma > 0.0)) {
        throw ConfigError("step size gamma must be positive");
    }
    if (!qp.box().contains(x0, 0.0)) {
        throw ConfigError("initial state lies outside the box");
    }
    RunTrace trace;
    TraceBuilder tb(trace, oracle);
    Vector x = x0;
    if (record_states) {
        trace.states.push_back(x);
    }
    std::int64_t k = 0;
    for (Index z = 0; z < plan.events(); ++z) {
        const AggregateObjective agg = build_aggregate(qp, plan.state(z));
        const Matrix& m = mode == GradientMode::row_stacked ? agg.q_hat : agg.q_sym;
        const std::int64_t begin = k;
        tb.begin_interval(z, begin, begin + kappa[static_cast<std::size_t>(z)], gamma, agg);
        for (; k < begin + kappa[static_cast<std::size_t>(z)]; ++k) {
            IterationRow r = tb.row(k, agg, x);
            const Vector next = qp.box().project(x - gamma * (m * x + agg.r_hat));
            tb.push(r, (next - x).norm());
            x = next;
            if (record_states) {
                trace.states.push_back(x);
            }
        }
        tb.end_interval(agg, x);
    }
    trace.final_state = x;
    return trace;
}

Topology parse_topology(const std::string& name) {
    if (name == "complete") {
        return Topology::complete;
    }
    if (name == "ring") {
        return Topology::ring;
    }
    throw ConfigError("unknown topology '" + name + "' (expected complete or ring)");
}

Matrix metropolis_weights(Index agents, Topology topology) {
    if (agents < 1) {
        throw ConfigError("consensus needs at least one agent");
    }
    std::vector<std::vector<bool>> adj(static_cast<std::size_t>(agents),
                                       std::vector<bool>(static_cast<std::size_t>(agents), false));
    for (Index i = 0; i < agents; ++i) {
        for (Index j = 0; j < agents; ++j) {
            if (i == j) {
                continue;
            }
            const Index gap = std::abs(i - j);
            const bool edge = topology == Topology::complete || gap == 1 || gap == agents - 1;
            adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = edge;
        }
    }
    std::vector<double> degree(static_cast<std::size_t>(agents), 0.0);
    for (Index i = 0; i < agents; ++i) {
        for (Index j = 0; j < agents; ++j) {
            degree[static_cast<std::size_t>(i)] += adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ? 1.0 : 0.0;
        }
    }
    Matrix w = Matrix::Zero(agents, agents);
    for (Index i = 0; i < agents; ++i) {
        for (Index j = 0; j < agents; ++j) {
            if (adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
                w(i, j) = 1.0 / (1.0 + std::max(degree[static_cast<std::size_t>(i)],
                                                degree[static_cast<std::size_t>(j)]));
            }
        }
        w(i, i) = 1.0 - w.row(i).sum();
    }
    return w;
}

void validate_weights(const Matrix& w) {
    if (w.rows() != w.cols() || w.rows() == 0) {
        throw ConfigError("consensus weights must be a nonempty square matrix");
    }
    if ((w.array() < 0.0).any()) {
        throw ConfigError("consensus weights must be nonnegative");
    }
    for (Index i = 0; i < w.rows(); ++i) {
        if (std::abs(w.row(i).sum() - 1.0) > 1e-12 || std::abs(w.col(i).sum() - 1.0) > 1e-12) {
            throw ConfigError("consensus weights must be doubly stochastic");
        }
    }
}

RunTrace run_consensus(const TimeVaryingQP& qp, const SamplingPlan& plan,
                       const ConsensusConfig& config, const std::vector<std::int64_t>& kappa,
                       const Vector& x0, const OracleProvider& oracle, double* max_disagreement) {
    check_kappa(plan, kappa);
    validate_weights(config.weights);
    const Index N = qp.agents();
    if (config.weights.rows() != N) {
        throw ConfigError("consensus weights must be N x N");
    }
    if (!(config.gamma > 0.0)) {
        throw ConfigError("consensus step size must be positive");
    }
    if (!qp.box().contains(x0, 0.0)) {
        throw ConfigError("initial state lies outside the box");
    }
    const Index n = qp.dim();
    const double inv_n = 1.0 / static_cast<double>(N);

    RunTrace trace;
    TraceBuilder tb(trace, oracle);
    Matrix y = x0.replicate(1, N);  // column i is agent i's copy
    Vector mean = x0;
    double disagreement = 0.0;
    std::int64_t k = 0;
    for (Index z = 0; z < plan.events(); ++z) {
        const SampleState ss = plan.state(z);
        const AggregateObjective agg = build_aggregate(qp, ss);
        std::vector<Matrix> q_local;
        std::vector<Vector> r_local;
        for (Index i = 0; i < N; ++i) {
            const double theta = ss.theta[static_cast<std::size_t>(i)];
            q_local.push_back(inv_n * qp.q(theta));
            r_local.push_back(inv_n * qp.r(theta));
        }
        const std::int64_t begin = k;
        const std::int64_t end = begin + kappa[static_cast<std::size_t>(z)];
        tb.begin_interval(z, begin, end, config.gamma, agg);
        for (; k < end; ++k) {
            IterationRow r = tb.row(k, agg, mean);
            const Matrix mixed = y * config.weights.transpose();
            Matrix next(n, N);
            for (Index i = 0; i < N; ++i) {
                const auto ii = static_cast<std::size_t>(i);
                next.col(i) = qp.box().project(mixed.col(i) -
                                               config.gamma * (q_local[ii] * y.col(i) + r_local[ii]));
            }
            y = std::move(next);
            const Vector next_mean = y.rowwise().mean();
            tb.push(r, (next_mean - mean).norm());
            mean = next_mean;
            for (Index i = 0; i < N; ++i) {
                disagreement = std::max(disagreement, (y.col(i) - mean).norm());
            }
        }
        tb.end_interval(agg, mean);
    }
    trace.final_state = mean;
    if (max_disagreement != nullptr) {
        *max_disagreement = disagreement;
    }
    return trace;
}

}  // namespace tvqp
