#include "doctest.h"

#include <cmath>

#include "tvqp/bounds.hpp"

using namespace tvqp;

namespace {

ObjectiveConstants unit_1d() {
    ObjectiveConstants oc;
    oc.L = 2.0;
    oc.M = 2.0;
    oc.M_g = 1.0;
    oc.L_g = 2.0;
    oc.d_X = 2.0;
    oc.r_X = 1.0;
    oc.max_norm = 1.0;
    return oc;
}

BoundInputs unit_inputs() {
    BoundInputs bi;
    bi.N = 1;
    bi.B = 1;
    bi.n = 1;
    bi.lambda = 1.0;
    bi.kappa = 10;
    bi.r = 10;
    return bi;
}

}  // namespace

TEST_CASE("objective constants") {
    SUBCASE("scalar") {
        const auto agg = make_aggregate(BlockPartition::uniform(1, 1), Matrix::Constant(1, 1, 2.0), Vector::Zero(1));
        const auto oc = objective_constants(agg, Box::cube(1, -1, 1), 0.0, 0.0);
        CHECK(oc.L == doctest::Approx(2.0));
        CHECK(oc.M == doctest::Approx(2.0));
        CHECK(oc.M_g == doctest::Approx(1.0));
    }
    SUBCASE("two-sample nonconvex aggregate") {
        const double h = std::sqrt(2.0) / 2.0;
        Matrix q(2, 2);
        q << 1.2 - h, -h, -1.0, 1.2;
        const auto agg = make_aggregate(BlockPartition::uniform(2, 1), q, Vector::Zero(2));
        CHECK(objective_constants(agg, Box::cube(2, 0, 1), 0.0, 0.0).L == doctest::Approx(1.77).epsilon(0.01));
    }
    SUBCASE("linear") {
        Vector e1 = Vector::Zero(2);
        e1(0) = 1.0;
        const auto agg = make_aggregate(BlockPartition::uniform(2, 1), Matrix::Zero(2, 2), e1);
        const auto oc = objective_constants(agg, Box::cube(2, -1, 1), 0.0, 0.0);
        CHECK(oc.L == 0.0);
        CHECK(oc.M == doctest::Approx(1.0));
    }
}

TEST_CASE("constants block on the unit instance") {
    const double gamma = 0.01;
    const auto blk = constants_block(unit_1d(), unit_inputs(), gamma);
    CHECK(blk.E == doctest::Approx(1.0));
    CHECK(blk.D == doctest::Approx(1.0 - 3.0 * gamma));
    CHECK(blk.F == doctest::Approx(727.5));
    CHECK(blk.G == doctest::Approx(657.0));
    CHECK(blk.rho == doctest::Approx(1.0 - gamma * blk.c));

    const auto tiny = constants_block(unit_1d(), unit_inputs(), 1e-12);
    CHECK(tiny.D == doctest::Approx(1.0));
    CHECK(tiny.rho == doctest::Approx(1.0));

    CHECK_THROWS_AS(constants_block(unit_1d(), unit_inputs(), 0.9), ConfigError);
    CHECK_THROWS_AS(constants_block(unit_1d(), unit_inputs(), 0.0), ConfigError);
}

TEST_CASE("largest admissible step") {
    const auto gm = gamma_max(unit_1d(), unit_inputs());
    CHECK(gm.gamma_max > 0.0);
    CHECK(gm.gamma_max <= 0.25);
    CHECK(gm.terms.size() == 8);
    const auto blk = constants_block(unit_1d(), unit_inputs(), gm.gamma_max);
    CHECK(blk.D > 0.0);

    for (int N = 1; N <= 4; ++N) {
        for (int B = 1; B <= 5; B += 2) {
            auto oc = unit_1d();
            oc.L = 0.5 * N + 0.3 * B;
            auto bi = unit_inputs();
            bi.N = N;
            bi.B = B;
            const double cap = 2.0 / (oc.L * (1.0 + B + 2.0 * N * B));
            CHECK(gamma_max(oc, bi, 3.0).gamma_max <= cap);
        }
    }
}

TEST_CASE("suboptimality bound recursion") {
    const auto v = suboptimality_bound(1.0, {0.5, 0.5}, {3.0, 3.0}, {0.0, 0.1});
    REQUIRE(v.size() == 2);
    CHECK(v[0] == doctest::Approx(0.25));
    CHECK(v[1] == doctest::Approx(0.0875));
    const auto geo = suboptimality_bound(2.0, {0.9, 0.8, 0.7}, {2.0, 2.0, 2.0}, {0.0, 0.0, 0.0});
    CHECK(geo[2] == doctest::Approx(2.0 * 0.9 * 0.8 * 0.7));
    CHECK(uub_cap({0.5, 0.5}, {3.0, 3.0}, {0.0, 0.1}) == doctest::Approx(0.1 * 0.25 / 0.75));
}

TEST_CASE("argmin drift constants") {
    CHECK(k1(2, 0.25, 0.5, std::sqrt(2.0), 0.2) == doctest::Approx(6.14e-5).epsilon(2e-3));
    CHECK(argmin_distance_bound(1.0, 1.0, 2, 1.0, 1.0) == doctest::Approx(std::sqrt(2.0)));
    CHECK(argmin_distance_bound(0.0, 1.0, 2, 1.0, 1.0) == 0.0);

    const Box box = Box::cube(2, -1, 2);
    const Quadratic f{Matrix::Identity(2, 2), Vector::Ones(2), 0.5};
    CHECK(k2_term(f, f, f, box) == 0.0);
    Quadratic h = f;
    h.c -= 1.0;
    CHECK(k2_term(f, f, h, box) == doctest::Approx(box.volume()));

    const double floor = argmin_distance_bound(3.0, 0.5, 2, 2.0, 0.5);
    CHECK(tracking_error_bound(10.0, 0.5, 1e6, 0.5, 3.0, 2, 2.0, 0.5) == doctest::Approx(floor));
    const Quadratic env = envelope(3, 4.0);
    CHECK(env(Vector::Ones(3)) == doctest::Approx(1.5 + 4.0));
}

TEST_CASE("automatic step-size policy") {
    const TimeVaryingQP qp(BlockPartition::uniform(2, 1), Box::cube(2, -1, 1),
                           constant_family(Matrix::Identity(2, 2) * 2.0, Vector::Ones(2)), 2.0);
    BoundInputs bi;
    bi.N = 2;
    bi.B = 2;
    bi.n = 2;
    bi.kappa = 20;
    bi.r = 10;
    AutoGammaPolicy policy(qp, bi, 1.0, 0.9);
    const auto agg = build_aggregate(qp, {{0.0, 0.0}, 0.0});
    const double g0 = policy(0, agg);
    const double g1 = policy(1, agg);
    REQUIRE(policy.history().size() == 2);
    CHECK(g0 == doctest::Approx(0.9 * policy.history()[0].gmax.gamma_max));
    CHECK(g1 == doctest::Approx(0.9 * policy.history()[1].gmax.gamma_max));
    const auto& h0 = policy.history()[0].block;
    CHECK(policy.history()[1].block.a ==
          doctest::Approx(h0.a * std::pow(h0.rho, 9.0) + policy.history()[1].block.K));
    policy(0, agg);
    CHECK(policy.history().size() == 1);
}
