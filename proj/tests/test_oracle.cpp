#include "doctest.h"

#include <cmath>
#include <limits>

#include "tvqp/oracle.hpp"

using namespace tvqp;

namespace {

const double kR2 = std::sqrt(2.0) / 2.0;

Matrix m2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

AggregateObjective nonconvex_aggregate() {
    return make_aggregate(BlockPartition::uniform(2, 1), m2(1.2 - kR2, -kR2, -1.0, 1.2), Vector::Zero(2));
}

}  // namespace

TEST_CASE("strongly convex solver") {
    const Box unit = Box::cube(2, 0.0, 1.0);
    SUBCASE("PD symmetrization pinned at the origin") {
        const auto sol = solve_strongly_convex(m2(1.2 - kR2, -kR2, -kR2, 1.2), Vector::Zero(2), unit);
        CHECK(sol.x.norm() < 1e-9);
        CHECK(sol.value == doctest::Approx(0.0));
    }
    SUBCASE("clamped unconstrained minimizer") {
        Vector r(2);
        r << -2.0, 0.0;
        const auto sol = solve_strongly_convex(Matrix::Identity(2, 2), r, unit);
        CHECK(sol.x(0) == doctest::Approx(1.0));
        CHECK(std::abs(sol.x(1)) < 1e-12);
        CHECK(sol.residual <= 1e-10);
    }
    SUBCASE("centered cube") {
        const auto sol = solve_strongly_convex(Matrix::Identity(4, 4), Vector::Zero(4), Box::cube(4, -1, 1));
        CHECK(sol.x.norm() < 1e-12);
        CHECK(sol.value == 0.0);
    }
    SUBCASE("indefinite input") {
        CHECK_THROWS_AS(solve_strongly_convex(m2(1, 0, 0, -1), Vector::Zero(2), unit), OracleError);
    }
}

TEST_CASE("stationary sets") {
    SUBCASE("strongly convex aggregate has one point") {
        Matrix q = m2(3, 1, 0.5, 2);
        Vector r(2);
        r << 1.0, -4.0;
        const auto agg = make_aggregate(BlockPartition::uniform(2, 1), q, r);
        const Box box = Box::cube(2, -1, 1);
        const auto set = find_stationary_set(agg, box);
        REQUIRE(set.size() == 1);
        const auto direct = solve_strongly_convex(agg.q_sym, r, box);
        CHECK((set.points[0] - direct.x).norm() <= 10 * 1e-10);
    }
    SUBCASE("nonconvex aggregate keeps the origin and a cheaper boundary point") {
        const auto set = find_stationary_set(nonconvex_aggregate(), Box::cube(2, 0.0, 1.0));
        REQUIRE(set.size() >= 2);
        bool has_origin = false;
        double lowest = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < set.size(); ++p) {
            has_origin = has_origin || set.points[p].norm() < 1e-9;
            lowest = std::min(lowest, set.costs[p]);
        }
        CHECK(has_origin);
        CHECK(lowest < -1e-3);
    }
}

TEST_CASE("nearest stationary point") {
    StationarySet set;
    set.points = {Vector::Zero(2), Vector::Ones(2)};
    set.costs = {2.0, 1.0};
    Vector mid = Vector::Constant(2, 0.5);
    CHECK(nearest_stationary(set, mid).cost == 1.0);
    const auto exact = nearest_stationary(set, Vector::Zero(2));
    CHECK(exact.distance == 0.0);
    CHECK(exact.cost == 2.0);

    StationarySet single;
    single.points = {Vector::Constant(2, 3.0)};
    single.costs = {5.0};
    CHECK(nearest_stationary(single, mid).point == single.points[0]);
    CHECK_THROWS_AS(nearest_stationary(StationarySet{}, mid), OracleError);
}

TEST_CASE("eigenvalues of the symmetric part") {
    const auto e = symmetric_part_eigs(m2(1.2 - kR2, -kR2, -1.0, 1.2));
    CHECK(e.values(0) == doctest::Approx(1.77).epsilon(0.01 / 1.77));
    CHECK(std::abs(e.values(1) - (-0.08)) <= 0.01);
    const auto id = symmetric_part_eigs(Matrix::Identity(2, 2));
    CHECK(id.values(0) == 1.0);
    CHECK(id.values(1) == 1.0);
    const auto skew = symmetric_part_eigs(m2(0, 1, -1, 0));
    CHECK(skew.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("L2 distance between quadratics") {
    const Box unit1 = Box::cube(1, 0.0, 1.0);
    Quadratic zero{Matrix::Zero(1, 1), Vector::Zero(1), 0.0};
    Quadratic lin{Matrix::Zero(1, 1), Vector::Ones(1), 0.0};
    CHECK(l2_distance_squared(lin, zero, unit1) == doctest::Approx(1.0 / 3.0));
    CHECK(l2_distance_squared(lin, lin, unit1) == 0.0);

    const Box b3 = Box::cube(3, -1.0, 2.0);
    Quadratic one{Matrix::Zero(3, 3), Vector::Zero(3), 1.0};
    Quadratic none{Matrix::Zero(3, 3), Vector::Zero(3), 0.0};
    CHECK(l2_distance_squared(one, none, b3) == doctest::Approx(b3.volume()));

    // ∫_{[0,1]²} (x y)² = 1/9, using a = [[0, ½], [½, 0]].
    const Box unit2 = Box::cube(2, 0.0, 1.0);
    Quadratic xy{m2(0, 0.5, 0.5, 0), Vector::Zero(2), 0.0};
    CHECK(l2_distance_squared(xy, Quadratic{Matrix::Zero(2, 2), Vector::Zero(2), 0.0}, unit2) ==
          doctest::Approx(1.0 / 9.0));
}

TEST_CASE("error bound constant") {
    const Box box = Box::cube(3, -1, 1);
    const auto agg = make_aggregate(BlockPartition::uniform(3, 1), Matrix::Identity(3, 3), Vector::Zero(3));
    StationarySet origin;
    origin.points = {Vector::Zero(3)};
    origin.costs = {0.0};
    const auto est = estimate_error_bound_constant(agg, box, origin, 500, 3);
    CHECK(est.lambda == doctest::Approx(1.0));
    CHECK(est.used_samples == 500);

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 0.5;
    d(1, 1) = 4.0;
    const auto agg2 = make_aggregate(BlockPartition::uniform(2, 1), d, Vector::Zero(2));
    StationarySet origin2;
    origin2.points = {Vector::Zero(2)};
    origin2.costs = {0.0};
    const auto est2 = estimate_error_bound_constant(agg2, Box::cube(2, -0.1, 0.1), origin2, 10000, 5);
    CHECK(est2.lambda >= 1.0 / (1.0 + 4.0));
    CHECK(est2.lambda <= 1.0 / 0.5 + 1e-9);

    const auto degenerate = estimate_error_bound_constant(agg, box, origin, std::vector<Vector>{Vector::Zero(3)});
    CHECK(degenerate.lambda == 0.0);
    CHECK(degenerate.used_samples == 0);
}

TEST_CASE("separation and drift estimates") {
    StationarySet one;
    one.points = {Vector::Zero(2)};
    one.costs = {0.0};
    CHECK(std::isinf(estimate_separation(one)));

    StationarySet two;
    two.points = {Vector::Zero(2), Vector::Ones(2)};
    two.costs = {0.0, -1.0};
    CHECK(estimate_separation(two) == doctest::Approx(std::sqrt(2.0)));
    CHECK(estimate_sigma(two, two, 10.0) == doctest::Approx(std::sqrt(2.0)));
    CHECK(estimate_sigma(two, two, 1.0) == 1.0);
}

TEST_CASE("Halton points stay in the box") {
    const Box box = Box::cube(5, -2, 3);
    for (std::uint64_t i = 1; i < 200; ++i) {
        CHECK(box.contains(halton_point(box, i)));
    }
}
