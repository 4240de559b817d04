#include "tvqp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace tvqp::linalg {

SymmetricEigen jacobi_eigen(const Matrix& a_in, double tol, int max_sweeps) {
    const Index n = a_in.rows();
    if (a_in.cols() != n) {
        throw ConfigError("jacobi_eigen: matrix must be square");
    }
    Matrix a = a_in.triangularView<Eigen::Upper>();
    a.triangularView<Eigen::StrictlyLower>() = a.transpose().triangularView<Eigen::StrictlyLower>();
    Matrix v = Matrix::Identity(n, n);

    const double scale = std::max(a.norm(), 1e-300);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Index p = 0; p < n; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                off += a(p, q) * a(p, q);
            }
        }
        if (std::sqrt(2.0 * off) <= tol * scale) {
            break;
        }
        for (Index p = 0; p < n - 1; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) {
                    continue;
                }
                // Rotation angle from the classic stable formulation.
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index i, Index j) { return a(i, i) > a(j, j); });

    SymmetricEigen out{Vector(n), Matrix(n, n)};
    for (Index j = 0; j < n; ++j) {
        out.values(j) = a(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(j)]);
        out.vectors.col(j) = v.col(order[static_cast<std::size_t>(j)]);
    }
    return out;
}

Matrix symmetric_part(const Matrix& m) {
    return 0.5 * (m + m.transpose());
}

double symmetric_spectral_norm(const Matrix& sym) {
    if (sym.size() == 0) {
        return 0.0;
    }
    const auto eig = jacobi_eigen(sym);
    return std::max(std::abs(eig.values(0)), std::abs(eig.values(eig.values.size() - 1)));
}

double spectral_norm(const Matrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    // The smaller Gram matrix has the same nonzero spectrum.
    const Matrix gram = m.rows() <= m.cols() ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
    return std::sqrt(std::max(0.0, jacobi_eigen(gram).values(0)));
}

double min_eigenvalue(const Matrix& sym) {
    const auto eig = jacobi_eigen(sym);
    return eig.values(eig.values.size() - 1);
}

double max_eigenvalue(const Matrix& sym) {
    return jacobi_eigen(sym).values(0);
}

}  // namespace tvqp::linalg
