#pragma once

#include <cstdint>
#include <vector>

#include "tvqp/linalg.hpp"
#include "tvqp/qp_model.hpp"
#include "tvqp/types.hpp"

namespace tvqp {

struct ConvexSolution {
    Vector x;
    double value = 0.0;     // ½xᵀQx + rᵀx
    double residual = 0.0;  // ‖x − Π[x − ∇f(x)]‖
    long iterations = 0;
};

/// Projected gradient with step 1/λ_max(Q) until the fixed-point residual
/// drops below tol. Throws OracleError when Q is not positive definite.
ConvexSolution solve_strongly_convex(const Matrix& q, const Vector& r, const Box& box,
                                     double tol = 1e-10, long max_iterations = 5'000'000,
                                     const Vector* warm_start = nullptr);

/// ‖x − Π_box[x − grad]‖.
double fixed_point_residual(const Box& box, const Vector& x, const Vector& grad);

struct StationarySet {
    std::vector<Vector> points;
    std::vector<double> costs;
    double t_z = 0.0;
    double residual_tol = 1e-10;
    double dedup_radius = 1e-6;

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
};

struct StationaryOptions {
    int multistarts = 64;
    double tol = 1e-10;
    double dedup_radius = 1e-6;
    long max_iterations = 200'000;
    /// Enumerate all 3ⁿ active-set faces when n is at most this.
    Index face_enumeration_max_dim = 10;
};

/// Stationary points of g(·;t_z) over the box: multistart projected gradient
/// on the symmetrized gradient, plus exact face enumeration for small n so
/// that saddles are found too. A strongly convex aggregate short-circuits to
/// its unique minimizer.
StationarySet find_stationary_set(const AggregateObjective& agg, const Box& box,
                                  const StationaryOptions& options = {});

struct NearestStationary {
    Vector point;
    double cost = 0.0;
    double distance = 0.0;
};

/// Closest stored point; among points within dedup_radius of the closest
/// distance the lowest-cost one wins.
NearestStationary nearest_stationary(const StationarySet& set, const Vector& x);

/// Eigen-pairs of ½(M + Mᵀ), values descending.
linalg::SymmetricEigen symmetric_part_eigs(const Matrix& m);

/// q(x) = xᵀAx + bᵀx + c.
struct Quadratic {
    Matrix a;
    Vector b;
    double c = 0.0;

    double operator()(const Vector& x) const { return x.dot(a * x) + b.dot(x) + c; }
};

/// ½xᵀQx + rᵀx + offset as a Quadratic.
Quadratic quadratic_from_cost(const Matrix& q, const Vector& r, double offset = 0.0);

/// ∫_box (q1 − q2)² dx, exact via 1-D power moments.
double l2_distance_squared(const Quadratic& q1, const Quadratic& q2, const Box& box);

struct ErrorBoundEstimate {
    double lambda = 0.0;  // 0 when every sample was excluded
    Vector argmax;
    int used_samples = 0;
};

/// max over random box samples of dist(x, set) / ‖x − Π[x − ∇g(x)]‖.
ErrorBoundEstimate estimate_error_bound_constant(const AggregateObjective& agg, const Box& box,
                                                 const StationarySet& set, int samples,
                                                 std::uint64_t seed);

/// Same estimator over caller-supplied points.
ErrorBoundEstimate estimate_error_bound_constant(const AggregateObjective& agg, const Box& box,
                                                 const StationarySet& set,
                                                 const std::vector<Vector>& points);

/// Min distance between stationary points whose costs differ by more than 1e−9.
double estimate_separation(const StationarySet& set);

/// Max cross distance between two stationary sets, capped at `cap`.
double estimate_sigma(const StationarySet& a, const StationarySet& b, double cap);

/// n-dimensional Halton point in the box (first n primes as bases).
Vector halton_point(const Box& box, std::uint64_t index);

}  // namespace tvqp
