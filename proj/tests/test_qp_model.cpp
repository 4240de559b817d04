#include "doctest.h"

#include <cmath>
#include <numbers>

#include "tvqp/linalg.hpp"
#include "tvqp/qp_model.hpp"

using namespace tvqp;

namespace {

const double kPi = std::numbers::pi;
const double kR2 = std::sqrt(2.0) / 2.0;

TimeVaryingQP nonconvex_instance() {
    return TimeVaryingQP(BlockPartition::uniform(2, 1), Box::cube(2, 0.0, 1.0),
                         nonconvexity_example_family(), 0.04);
}

Matrix m2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

}  // namespace

TEST_CASE("aggregate of the two-sample nonconvexity instance") {
    const auto qp = nonconvex_instance();
    const auto agg = build_aggregate(qp, {{5 * kPi / 4, 3 * kPi / 2}, 3 * kPi / 2});
    const Matrix expected = m2(1.2 - kR2, -kR2, -1.0, 1.2);
    CHECK((agg.q_hat - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(agg.r_hat.norm() == 0.0);
    CHECK((agg.q_sym - linalg::symmetric_part(expected)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("identical sample times give the sampled matrix itself") {
    const auto qp = nonconvex_instance();
    const double t = 0.7;
    const auto agg = build_aggregate(qp, {{t, t}, t});
    CHECK((agg.q_hat - qp.q(t)).norm() < 1e-15);
    CHECK((agg.q_hat - agg.q_hat.transpose()).norm() == 0.0);
    CHECK(linalg::min_eigenvalue(agg.q_sym) > 0.0);
}

TEST_CASE("scalar blocks sampled at different times") {
    HarmonicFamily f = constant_family(m2(2, 0, 0, 2), Vector::Zero(2));
    f.q_cos = m2(1, 0, 0, 0);
    f.omega = 1.0;
    TimeVaryingQP qp(BlockPartition::uniform(2, 1), Box::cube(2, -1, 1), f, 1.0);
    const auto agg = build_aggregate(qp, {{0.0, kPi}, kPi});
    CHECK((agg.q_hat - m2(3, 0, 0, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("aggregate cost") {
    SUBCASE("origin gives the value offset") {
        const auto agg = make_aggregate(BlockPartition::uniform(2, 1), m2(1, 2, 3, 4), Vector::Ones(2), 2.5);
        CHECK(eval_cost(agg, Vector::Zero(2)) == 2.5);
    }
    SUBCASE("scalar hand value") {
        const auto agg = make_aggregate(BlockPartition::uniform(1, 1), Matrix::Constant(1, 1, 2.0),
                                        Vector::Ones(1));
        CHECK(eval_cost(agg, Vector::Constant(1, 3.0)) == doctest::Approx(12.0));
    }
    SUBCASE("stacked nonconvex matrix at (1,1)") {
        // Half the entry sum: ½(2.4 − √2 − 1).
        const auto agg = make_aggregate(BlockPartition::uniform(2, 1), m2(1.2 - kR2, -kR2, -1.0, 1.2),
                                        Vector::Zero(2));
        CHECK(eval_cost(agg, Vector::Ones(2)) == doctest::Approx(0.5 * (1.4 - std::sqrt(2.0))));
    }
    SUBCASE("wrong dimension") {
        const auto agg = make_aggregate(BlockPartition::uniform(1, 1), Matrix::Ones(1, 1), Vector::Ones(1));
        CHECK_THROWS_AS(eval_cost(agg, Vector::Zero(2)), ConfigError);
    }
}

TEST_CASE("block directions in both gradient modes") {
    const auto agg = make_aggregate(BlockPartition::uniform(2, 1), m2(1.2 - kR2, -kR2, -1.0, 1.2),
                                    Vector::Zero(2));
    Vector x(2);
    x << 1.0, 0.0;
    CHECK(eval_block_direction(agg, 1, x, GradientMode::row_stacked)(0) == doctest::Approx(-1.0));
    CHECK(eval_block_direction(agg, 1, x, GradientMode::symmetrized)(0) ==
          doctest::Approx(-0.8536).epsilon(1e-4));

    const auto sym = make_aggregate(BlockPartition::uniform(2, 1), m2(2, 1, 1, 3), Vector::Ones(2));
    const Vector y = Vector::Random(2);
    CHECK((eval_direction(sym, y, GradientMode::row_stacked) -
           eval_direction(sym, y, GradientMode::symmetrized)).norm() < 1e-15);

    Vector r(2);
    r << 0.3, -0.4;
    const auto linear = make_aggregate(BlockPartition::uniform(2, 1), Matrix::Zero(2, 2), r);
    CHECK(eval_block_direction(linear, 1, y, GradientMode::row_stacked)(0) == -0.4);
    CHECK(eval_block_direction(linear, 0, y, GradientMode::symmetrized)(0) == 0.3);
}

TEST_CASE("block projection") {
    const auto part = BlockPartition::uniform(1, 2);
    const Box unit = Box::cube(2, 0.0, 1.0);
    Vector v(2);
    v << 0.5, 2.0;
    CHECK(project_box(unit, part, 0, v) == Vector((Vector(2) << 0.5, 1.0).finished()));
    v << 0.25, 0.75;
    CHECK(project_box(unit, part, 0, v) == v);
    const Box wide = Box::cube(1, -100, 100);
    CHECK(project_box(wide, BlockPartition::uniform(1, 1), 0, Vector::Constant(1, -199.0))(0) == -100.0);
}

TEST_CASE("jump constant") {
    SUBCASE("only Q moves") {
        const Index n = 3;
        HarmonicFamily f = constant_family(Matrix::Identity(n, n) * 4.0, Vector::Zero(n));
        f.q_cos = Matrix::Identity(n, n);
        f.omega = 1.0;
        TimeVaryingQP qp(BlockPartition::uniform(n, 1), Box::cube(n, -1, 1), f, 1.0);
        double sum_lq = 0.0;
        for (Index i = 0; i < n; ++i) {
            sum_lq += qp.lipschitz_q(i);
            CHECK(qp.lipschitz_r(i) == 0.0);
        }
        CHECK(continuous_jump_constant(qp) == doctest::Approx(0.5 * static_cast<double>(n) * sum_lq));
    }
    SUBCASE("only r moves") {
        HarmonicFamily f = constant_family(Matrix::Identity(2, 2), Vector::Zero(2));
        Vector rs(2);
        rs << 1.0, 0.0;
        f.r_sin = rs;
        f.r_omega = 1.0;
        TimeVaryingQP qp(BlockPartition::uniform(2, 1), Box::cube(2, -1, 1), f, 1.0);
        CHECK(qp.lipschitz_r(0) + qp.lipschitz_r(1) == doctest::Approx(1.0));
        CHECK(continuous_jump_constant(qp) == doctest::Approx(std::sqrt(2.0)));
    }
    SUBCASE("static problem") {
        TimeVaryingQP qp(BlockPartition::uniform(2, 1), Box::cube(2, -1, 1),
                         constant_family(Matrix::Identity(2, 2), Vector::Ones(2)), 1.0);
        CHECK(continuous_jump_constant(qp) == 0.0);
    }
}

TEST_CASE("invalid problems are rejected") {
    CHECK_THROWS_AS(TimeVaryingQP(BlockPartition::uniform(2, 1), Box::cube(3, -1, 1),
                                  constant_family(Matrix::Identity(2, 2), Vector::Zero(2)), 1.0),
                    ConfigError);
    CHECK_THROWS_AS(TimeVaryingQP(BlockPartition::uniform(2, 1), Box::cube(2, -1, 1),
                                  constant_family(Matrix::Identity(2, 2), Vector::Zero(2)), 0.0),
                    ConfigError);
    CHECK_THROWS_AS(parse_gradient_mode("newton"), ConfigError);
    CHECK(parse_gradient_mode(to_string(GradientMode::symmetrized)) == GradientMode::symmetrized);
}

TEST_CASE("symmetric eigenvalues") {
    const auto e = linalg::jacobi_eigen(m2(2, 1, 1, 2));
    CHECK(e.values(0) == doctest::Approx(3.0));
    CHECK(e.values(1) == doctest::Approx(1.0));
    const Matrix rnd = Matrix::Random(6, 6);
    const Matrix s = linalg::symmetric_part(rnd);
    const auto es = linalg::jacobi_eigen(s);
    CHECK((es.vectors * es.values.asDiagonal() * es.vectors.transpose() - s).norm() < 1e-12);
}
