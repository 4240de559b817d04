#include "doctest.h"

#include <limits>

#include "tvqp/bcd_engine.hpp"
#include "tvqp/bounds.hpp"

using namespace tvqp;

namespace {

TimeVaryingQP static_problem(Index agents, Index block, double lo, double hi) {
    const Index n = agents * block;
    Matrix q = Matrix::Identity(n, n) * 3.0;
    for (Index i = 0; i + 1 < n; ++i) {
        q(i, i + 1) = q(i + 1, i) = 0.5;
    }
    Vector r = Vector::LinSpaced(n, -2.0, 2.0);
    return TimeVaryingQP(BlockPartition::uniform(agents, block), Box::cube(n, lo, hi),
                         constant_family(q, r), 1.0);
}

}  // namespace

TEST_CASE("single scalar step") {
    const auto agg = make_aggregate(BlockPartition::uniform(1, 1), Matrix::Constant(1, 1, 2.0), Vector::Zero(1));
    const Box box = Box::cube(1, -100, 100);
    const auto sched = synchronous_schedule(1, {1});
    auto state = make_network_state(agg.partition, Vector::Ones(1), 1);
    const Vector s = step(0, agg, box, sched, state, 0.1, GradientMode::row_stacked);
    CHECK(state.x(0) == doctest::Approx(0.8));
    CHECK(s(0) == doctest::Approx(-0.2));
}

TEST_CASE("projection clamps a large step") {
    const auto agg = make_aggregate(BlockPartition::uniform(1, 1), Matrix::Zero(1, 1), Vector::Constant(1, 200.0));
    const auto sched = synchronous_schedule(1, {1});
    auto state = make_network_state(agg.partition, Vector::Ones(1), 1);
    step(0, agg, Box::cube(1, -100, 100), sched, state, 1.0, GradientMode::row_stacked);
    CHECK(state.x(0) == -100.0);
}

TEST_CASE("idle iteration leaves the state unchanged") {
    const auto qp = static_problem(2, 1, -1, 1);
    const auto agg = build_aggregate(qp, {{0.0, 0.0}, 0.0});
    auto sched = make_empty_schedule(2, 3, {5});
    auto state = make_network_state(qp.partition(), Vector::Constant(2, 0.5), 3);
    const Vector s = step(0, agg, qp.box(), sched, state, 0.1, GradientMode::row_stacked);
    CHECK(s.norm() == 0.0);
    CHECK(state.x == Vector::Constant(2, 0.5));
}

TEST_CASE("stamps outside the ring are rejected") {
    const auto qp = static_problem(2, 1, -1, 1);
    const auto agg = build_aggregate(qp, {{0.0, 0.0}, 0.0});
    auto sched = make_empty_schedule(2, 2, {6});
    sched.deliveries[4].push_back({1, 0, 1});
    auto state = make_network_state(qp.partition(), Vector::Zero(2), 2);
    for (std::int64_t k = 0; k < 4; ++k) {
        step(k, agg, qp.box(), sched, state, 0.1, GradientMode::row_stacked);
    }
    CHECK_THROWS_AS(step(4, agg, qp.box(), sched, state, 0.1, GradientMode::row_stacked), ConfigError);
}

TEST_CASE("static synchronous run descends and settles") {
    const auto qp = static_problem(3, 2, -5, 5);
    const auto plan = make_sampling_plan(1.0, 0.0, {{0}, {0}, {0}});
    const auto sched = synchronous_schedule(3, {400});
    const auto trace = run(qp, plan, sched, fixed_gamma(0.1), Vector::Constant(6, 4.0));
    for (std::size_t k = 1; k < trace.rows.size(); ++k) {
        CHECK(trace.rows[k].cost <= trace.rows[k - 1].cost + 1e-12);
    }
    CHECK(trace.rows.back().s_norm < 1e-10);
}

TEST_CASE("beta sums the trailing window") {
    const auto qp = static_problem(2, 2, -5, 5);
    ScheduleParams p;
    p.agents = 2;
    p.B = 4;
    p.kappa = {60};
    p.p_update = {0.5, 0.5};
    p.p_comm = {0.5, 0.5};
    const auto sched = generate_schedule(9, p);
    const auto plan = make_sampling_plan(1.0, 0.0, {{0}, {0}});
    const auto trace = run(qp, plan, sched, fixed_gamma(0.05), Vector::Constant(4, 3.0));
    for (std::size_t k = 0; k < trace.rows.size(); ++k) {
        double expected = 0.0;
        for (std::size_t j = k >= 4 ? k - 4 : 0; j < k; ++j) {
            expected += trace.rows[j].s_norm * trace.rows[j].s_norm;
        }
        CHECK(trace.rows[k].beta == doctest::Approx(expected).epsilon(1e-12));
        CHECK(trace.rows[k].beta <= 4.0 * qp.box().diameter() * qp.box().diameter() + 1e-9);
    }
}

TEST_CASE("runs are deterministic") {
    const auto qp = static_problem(3, 1, -2, 2);
    const auto plan = generate_sampling(4, 1.0, 3.0, {0.5, 0.5, 0.5});
    ScheduleParams p;
    p.agents = 3;
    p.B = 3;
    p.kappa.assign(static_cast<std::size_t>(plan.events()), 30);
    p.p_update = {0.4, 0.5, 0.6};
    p.p_comm = {0.6, 0.5, 0.4};
    const auto sched = generate_schedule(4, p);
    const Vector x0 = random_initial_state(qp.box(), 4);
    const auto a = run(qp, plan, sched, fixed_gamma(0.05), x0);
    const auto b = run(qp, plan, sched, fixed_gamma(0.05), x0);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].cost == b.rows[k].cost);
        CHECK(a.rows[k].s_norm == b.rows[k].s_norm);
    }
}

TEST_CASE("synchronous strongly convex run stays under the rate bound") {
    HarmonicFamily f = constant_family(Matrix::Identity(2, 2) * 2.0, Vector::Ones(2));
    f.q_cos = Matrix::Identity(2, 2) * 0.5;
    f.omega = 0.3;
    const TimeVaryingQP qp(BlockPartition::uniform(1, 2), Box::cube(2, -1, 1), f, 1.5);
    const auto plan = generate_sampling(2, 1.0, 4.0, {1.0});
    const std::vector<std::int64_t> kappa(static_cast<std::size_t>(plan.events()), 40);
    const auto sched = synchronous_schedule(1, kappa);

    BoundInputs bi;
    bi.N = 1;
    bi.B = 1;
    bi.n = 2;
    bi.kappa = 40;
    bi.r = 40;
    AutoGammaPolicy policy(qp, bi, plan.delta, 0.9);
    EngineOptions opts;
    opts.oracle = default_oracle(qp);
    const auto trace = run(qp, plan, sched, policy, Vector::Constant(2, 0.9), opts);
    REQUIRE(policy.history().size() == trace.intervals.size());
    for (std::size_t z = 0; z < trace.intervals.size(); ++z) {
        const auto& blk = policy.history()[z].block;
        CHECK(trace.intervals[z].end_alpha <= blk.a * std::pow(blk.rho, 39.0) + 1e-9);
        double prev = std::numeric_limits<double>::infinity();
        for (auto k = trace.intervals[z].begin; k < trace.intervals[z].end; ++k) {
            const double a = trace.rows[static_cast<std::size_t>(k)].alpha;
            CHECK(a <= prev + 1e-12);
            prev = a;
        }
    }
}

TEST_CASE("first quiet iteration") {
    const auto qp = static_problem(2, 1, -3, 3);
    const auto plan = make_sampling_plan(1.0, 0.0, {{0}, {0}});
    const auto sched = synchronous_schedule(2, {500});
    const auto trace = run(qp, plan, sched, fixed_gamma(0.2), Vector::Constant(2, 2.0));
    const auto quiet = estimate_khat(trace, 0, 1e-6);
    CHECK_FALSE(quiet.exhausted);
    CHECK(quiet.k < 500);
    CHECK(estimate_khat(trace, 0, std::numeric_limits<double>::infinity()).k == 1);
    const auto none = estimate_khat(trace, 0, 0.0);
    CHECK(none.exhausted);
    CHECK(none.k == 500);
}

TEST_CASE("engine rejects mismatched inputs") {
    const auto qp = static_problem(2, 1, -1, 1);
    const auto plan = make_sampling_plan(1.0, 1.0, {{0, 1}, {0}});
    CHECK_THROWS_AS(run(qp, plan, synchronous_schedule(2, {5}), fixed_gamma(0.1), Vector::Zero(2)), ConfigError);
    CHECK_THROWS_AS(run(qp, plan, synchronous_schedule(2, {5, 5}), fixed_gamma(0.1), Vector::Constant(2, 3.0)),
                    ConfigError);
    CHECK_THROWS_AS(fixed_gamma(0.0), ConfigError);
}
