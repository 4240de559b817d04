#include "tvqp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tvqp {

namespace {

std::vector<std::uint64_t> first_primes(Index count) {
    std::vector<std::uint64_t> primes;
    for (std::uint64_t c = 2; static_cast<Index>(primes.size()) < count; ++c) {
        bool prime = true;
        for (const auto p : primes) {
            if (p * p > c) {
                break;
            }
            if (c % p == 0) {
                prime = false;
                break;
            }
        }
        if (prime) {
            primes.push_back(c);
        }
    }
    return primes;
}

double radical_inverse(std::uint64_t index, std::uint64_t base) {
    double result = 0.0;
    double f = 1.0 / static_cast<double>(base);
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= static_cast<double>(base);
    }
    return result;
}

void merge_candidate(std::vector<std::pair<double, Vector>>& found, double cost, Vector x) {
    found.emplace_back(cost, std::move(x));
}

StationarySet dedup(std::vector<std::pair<double, Vector>> found, double t_z, double tol,
                    double radius) {
    std::stable_sort(found.begin(), found.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    StationarySet set;
    set.t_z = t_z;
    set.residual_tol = tol;
    set.dedup_radius = radius;
    for (auto& [cost, x] : found) {
        bool fresh = true;
        for (const auto& kept : set.points) {
            if ((kept - x).norm() < radius) {
                fresh = false;
                break;
            }
        }
        if (fresh) {
            set.points.push_back(std::move(x));
            set.costs.push_back(cost);
        }
    }
    return set;
}

// Every active-set face {lo, hi, free}ⁿ: solve the free block of ∇g = 0 and
// keep the solutions that are projection fixed points.
void enumerate_faces(const AggregateObjective& agg, const Box& box, double tol,
                     std::vector<std::pair<double, Vector>>& found) {
    const Index n = agg.q_sym.rows();
    const auto total = static_cast<std::uint64_t>(std::llround(std::pow(3.0, static_cast<double>(n))));
    for (std::uint64_t code = 0; code < total; ++code) {
        std::uint64_t c = code;
        std::vector<Index> free_idx;
        Vector x(n);
        for (Index j = 0; j < n; ++j) {
            const int s = static_cast<int>(c % 3);
            c /= 3;
            if (s == 0) {
                x(j) = box.lo()(j);
            } else if (s == 1) {
                x(j) = box.hi()(j);
            } else {
                x(j) = 0.0;
                free_idx.push_back(j);
            }
        }
        const auto m = static_cast<Index>(free_idx.size());
        if (m > 0) {
            Matrix qff(m, m);
            Vector rhs(m);
            for (Index a = 0; a < m; ++a) {
                rhs(a) = -agg.r_hat(free_idx[static_cast<std::size_t>(a)]);
                for (Index j = 0; j < n; ++j) {
                    if (std::find(free_idx.begin(), free_idx.end(), j) == free_idx.end()) {
                        rhs(a) -= agg.q_sym(free_idx[static_cast<std::size_t>(a)], j) * x(j);
                    }
                }
                for (Index b = 0; b < m; ++b) {
                    qff(a, b) = agg.q_sym(free_idx[static_cast<std::size_t>(a)],
                                          free_idx[static_cast<std::size_t>(b)]);
                }
            }
            Eigen::FullPivLU<Matrix> lu(qff);
            if (lu.rank() < m) {
                continue;
            }
            const Vector xf = lu.solve(rhs);
            for (Index a = 0; a < m; ++a) {
                x(free_idx[static_cast<std::size_t>(a)]) = xf(a);
            }
        }
        if (!box.contains(x, 1e-12 * (1.0 + box.max_norm()))) {
            continue;
        }
        x = box.project(x);
        const Vector grad = eval_direction(agg, x, GradientMode::symmetrized);
        if (fixed_point_residual(box, x, grad) <= tol) {
            merge_candidate(found, eval_cost(agg, x), x);
        }
    }
}

}  // namespace

double fixed_point_residual(const Box& box, const Vector& x, const Vector& grad) {
    return (x - box.project(x - grad)).norm();
}

ConvexSolution solve_strongly_convex(const Matrix& q, const Vector& r, const Box& box,
                                     double tol, long max_iterations, const Vector* warm_start) {
    const Index n = q.rows();
    if (q.cols() != n || r.size() != n || box.dim() != n) {
        throw ConfigError("solve_strongly_convex: dimension mismatch");
    }
    const Matrix sym = linalg::symmetric_part(q);
    const auto eig = linalg::jacobi_eigen(sym);
    const double lmin = eig.values(n - 1);
    const double lmax = eig.values(0);
    if (!(lmin > 0.0)) {
        throw OracleError("solve_strongly_convex: matrix is not positive definite (lambda_min = " +
                          std::to_string(lmin) + ")");
    }
    const double step = 1.0 / lmax;
    ConvexSolution sol;
    sol.x = warm_start != nullptr ? box.project(*warm_start) : box.project(Vector::Zero(n));
    Vector grad = sym * sol.x + r;
    sol.residual = fixed_point_residual(box, sol.x, grad);
    while (sol.residual > tol && sol.iterations < max_iterations) {
        Vector next = box.project(sol.x - step * grad);
        if (next == sol.x) {
            break;  // no representable progress left
        }
        sol.x = std::move(next);
        grad.noalias() = sym * sol.x;
        grad += r;
        sol.residual = fixed_point_residual(box, sol.x, grad);
        ++sol.iterations;
    }
    sol.value = 0.5 * sol.x.dot(sym * sol.x) + r.dot(sol.x);
    return sol;
}

Vector halton_point(const Box& box, std::uint64_t index) {
    const Index n = box.dim();
    static thread_local std::vector<std::uint64_t> primes;
    if (static_cast<Index>(primes.size()) < n) {
        primes = first_primes(n);
    }
    Vector x(n);
    for (Index j = 0; j < n; ++j) {
        const double u = radical_inverse(index, primes[static_cast<std::size_t>(j)]);
        x(j) = box.lo()(j) + u * (box.hi()(j) - box.lo()(j));
    }
    return x;
}

StationarySet find_stationary_set(const AggregateObjective& agg, const Box& box,
                                  const StationaryOptions& options) {
    if (options.multistarts < 1) {
        throw ConfigError("find_stationary_set: multistarts must be >= 1");
    }
    const Index n = agg.q_sym.rows();
    const auto eig = linalg::jacobi_eigen(agg.q_sym);
    std::vector<std::pair<double, Vector>> found;

    if (eig.values(n - 1) > 0.0) {
        ConvexSolution sol = solve_strongly_convex(agg.q_sym, agg.r_hat, box, options.tol);
        const double cost = eval_cost(agg, sol.x);
        merge_candidate(found, cost, std::move(sol.x));
        return dedup(std::move(found), agg.t_z(), options.tol, options.dedup_radius);
    }

    const double lip = std::max(std::abs(eig.values(0)), std::abs(eig.values(n - 1)));
    const double step = lip > 0.0 ? 1.0 / lip : 1.0;
    for (int s = 0; s < options.multistarts; ++s) {
        // Index 0 of the Halton sequence is the lower corner; start at 1.
        Vector x = halton_point(box, static_cast<std::uint64_t>(s) + 1);
        Vector grad = eval_direction(agg, x, GradientMode::symmetrized);
        double res = fixed_point_residual(box, x, grad);
        for (long it = 0; it < options.max_iterations && res > options.tol; ++it) {
            Vector next = box.project(x - step * grad);
            if (next == x) {
                break;
            }
            x = std::move(next);
            grad = eval_direction(agg, x, GradientMode::symmetrized);
            res = fixed_point_residual(box, x, grad);
        }
        if (res <= options.tol) {
            const double cost = eval_cost(agg, x);
            merge_candidate(found, cost, std::move(x));
        }
    }
    if (n <= options.face_enumeration_max_dim) {
        enumerate_faces(agg, box, options.tol, found);
    }
    return dedup(std::move(found), agg.t_z(), options.tol, options.dedup_radius);
}

NearestStationary nearest_stationary(const StationarySet& set, const Vector& x) {
    if (set.empty()) {
        throw OracleError("nearest_stationary: stationary set is empty");
    }
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> dist(set.size());
    for (std::size_t p = 0; p < set.size(); ++p) {
        dist[p] = (set.points[p] - x).norm();
        best = std::min(best, dist[p]);
    }
    std::size_t pick = set.size();
    for (std::size_t p = 0; p < set.size(); ++p) {
        if (dist[p] <= best + set.dedup_radius && (pick == set.size() || set.costs[p] < set.costs[pick])) {
            pick = p;
        }
    }
    return {set.points[pick], set.costs[pick], dist[pick]};
}

linalg::SymmetricEigen symmetric_part_eigs(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw ConfigError("symmetric_part_eigs: matrix must be square");
    }
    return linalg::jacobi_eigen(linalg::symmetric_part(m));
}

Quadratic quadratic_from_cost(const Matrix& q, const Vector& r, double offset) {
    return Quadratic{0.5 * q, r, offset};
}

double l2_distance_squared(const Quadratic& q1, const Quadratic& q2, const Box& box) {
    const Index n = box.dim();
    if (q1.a.rows() != n || q2.a.rows() != n || q1.b.size() != n || q2.b.size() != n) {
        throw ConfigError("l2_distance_squared: dimension mismatch");
    }
    const Matrix a = linalg::symmetric_part(q1.a - q2.a);
    const Vector b = q1.b - q2.b;
    const double c = q1.c - q2.c;

    // ratio(j, p) = ∫ x_j^p / ∫ 1 over axis j, p = 0..4.
    Matrix ratio(n, 5);
    for (Index j = 0; j < n; ++j) {
        const double lo = box.lo()(j);
        const double hi = box.hi()(j);
        const double width = hi - lo;
        for (int p = 0; p <= 4; ++p) {
            ratio(j, p) = (std::pow(hi, p + 1) - std::pow(lo, p + 1)) / (p + 1) / width;
        }
    }
    const double volume = box.volume();

    // Mean of a monomial given by its index multiset.
    auto mean = [&](std::initializer_list<Index> idx) {
        Index keys[4];
        int counts[4];
        int m = 0;
        for (const Index j : idx) {
            int slot = 0;
            while (slot < m && keys[slot] != j) {
                ++slot;
            }
            if (slot == m) {
                keys[m] = j;
                counts[m] = 0;
                ++m;
            }
            ++counts[slot];
        }
        double v = 1.0;
        for (int s = 0; s < m; ++s) {
            v *= ratio(keys[s], counts[s]);
        }
        return v;
    };

    double quartic = 0.0;
    double cubic = 0.0;
    double quad_a = 0.0;
    double quad_b = 0.0;
    double lin = 0.0;
    for (Index i = 0; i < n; ++i) {
        lin += b(i) * mean({i});
        for (Index j = 0; j < n; ++j) {
            quad_a += a(i, j) * mean({i, j});
            quad_b += b(i) * b(j) * mean({i, j});
            if (a(i, j) == 0.0) {
                continue;
            }
            for (Index k = 0; k < n; ++k) {
                cubic += a(i, j) * b(k) * mean({i, j, k});
                for (Index l = 0; l < n; ++l) {
                    quartic += a(i, j) * a(k, l) * mean({i, j, k, l});
                }
            }
        }
    }
    return volume * (quartic + 2.0 * cubic + 2.0 * c * quad_a + quad_b + 2.0 * c * lin + c * c);
}

ErrorBoundEstimate estimate_error_bound_constant(const AggregateObjective& agg, const Box& box,
                                                 const StationarySet& set,
                                                 const std::vector<Vector>& points) {
    ErrorBoundEstimate est;
    for (const auto& x : points) {
        const Vector grad = eval_direction(agg, x, GradientMode::symmetrized);
        const double res = fixed_point_residual(box, x, grad);
        if (res < 1e-12) {
            continue;
        }
        ++est.used_samples;
        const double ratio = nearest_stationary(set, x).distance / res;
        if (ratio > est.lambda) {
            est.lambda = ratio;
            est.argmax = x;
        }
    }
    return est;
}

ErrorBoundEstimate estimate_error_bound_constant(const AggregateObjective& agg, const Box& box,
                                                 const StationarySet& set, int samples,
                                                 std::uint64_t seed) {
    Rng rng = make_rng(seed, 0x0e7b);
    std::vector<Vector> points;
    points.reserve(static_cast<std::size_t>(std::max(samples, 0)));
    for (int s = 0; s < samples; ++s) {
        Vector x(box.dim());
        for (Index j = 0; j < box.dim(); ++j) {
            x(j) = uniform(rng, box.lo()(j), box.hi()(j));
        }
        points.push_back(std::move(x));
    }
    return estimate_error_bound_constant(agg, box, set, points);
}

double estimate_separation(const StationarySet& set) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < set.size(); ++p) {
        for (std::size_t q = p + 1; q < set.size(); ++q) {
            if (std::abs(set.costs[p] - set.costs[q]) > 1e-9) {
                best = std::min(best, (set.points[p] - set.points[q]).norm());
            }
        }
    }
    return best;
}

double estimate_sigma(const StationarySet& a, const StationarySet& b, double cap) {
    if (a.empty() || b.empty()) {
        throw OracleError("estimate_sigma: stationary sets must be nonempty");
    }
    double worst = 0.0;
    for (const auto& x : a.points) {
        for (const auto& y : b.points) {
            worst = std::max(worst, (x - y).norm());
        }
    }
    return std::min(worst, cap);
}

}  // namespace tvqp
