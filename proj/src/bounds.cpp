#include "tvqp/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "tvqp/linalg.hpp"

namespace tvqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Raw {
    ConstantsBlock block;
    double H = 0.0;  // G/F + E/D
};

Raw evaluate(const ObjectiveConstants& oc, const BoundInputs& bi, double gamma,
             std::optional<double> carried) {
    const double L = oc.L;
    const double N = static_cast<double>(bi.N);
    const double B = static_cast<double>(bi.B);
    const double lam2 = bi.lambda * bi.lambda;
    const double d2 = oc.d_X * oc.d_X;
    const double sigma = bi.sigma < 0.0 ? oc.d_X : bi.sigma;

    Raw raw;
    ConstantsBlock& k = raw.block;
    k.gamma = gamma;
    k.D = (2.0 - gamma * L * (1.0 + B + N * B)) / 2.0;
    k.E = L * N * B / 2.0;
    const double lead = N * L * L / 2.0 * (N * (7.0 * L * L + 6.0 * L + 3.0) + 3.0);
    k.F = lead +
          1.5 * (B * N * (6.0 * std::pow(L, 4) + 12.0 * std::pow(L, 3) + 14.0 * L * L) +
                 3.0 * L * L + 6.0 * L + 7.0 +
                 N * lam2 * (L * L * (B * N * (6.0 * L * L + 8.0) + 3.0) + 4.0)) +
          1.0;
    k.G = lead + L * B * N / 2.0 +
          N * B * L * L * (9.0 * L * L + 18.0 * L + 21.0 + N * lam2 * (9.0 * L * L + 12.0));
    raw.H = k.G / k.F + k.E / k.D;
    k.c = k.D / (2.0 * k.F + 2.0 * k.D);
    k.rho = 1.0 - gamma * k.c;

    const double coupling = 8.0 * k.E * raw.H * k.F;  // 8E(G/F + E/D)F
    if (!carried) {
        k.a = std::max(oc.L_g * oc.d_X, coupling * B * d2 / k.D);
        k.b = coupling > 0.0 ? k.D / coupling * k.a : B * d2;
        k.K = 0.0;
    } else {
        k.K = 2.0 * oc.L_t * oc.Delta + B * oc.d_X * oc.M + oc.L_g * sigma +
              4.0 * B * B * L * d2 * k.E * raw.H * k.F / k.D;
        k.a = *carried + k.K;
        k.b = B * d2;
    }
    return raw;
}

std::vector<GammaMaxTerm> terms_from(const Raw& raw, const ObjectiveConstants& oc,
                                     const BoundInputs& bi) {
    const ConstantsBlock& k = raw.block;
    const double L = oc.L;
    const double N = static_cast<double>(bi.N);
    const double B = static_cast<double>(bi.B);
    auto safe_div = [](double num, double den) { return den > 0.0 ? num / den : kInf; };

    const double A = (k.b > 0.0 ? k.a / k.b : kInf) + 2.0 * k.E + k.D * k.c;
    const double disc = A * A - 4.0 * k.D * k.E * k.c;
    double root = std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(A)) {
        root = kInf;
    } else if (disc >= 0.0) {
        // Rationalized form of (A − √disc)/(2Ec); stays finite as Ec → 0.
        root = 2.0 * k.D / (A + std::sqrt(disc));
    }
    return {
        {"half", 0.5},
        {"descent", safe_div(2.0, L * (1.0 + B + 2.0 * N * B))},
        {"inv_GF_ED", safe_div(1.0, raw.H)},
        {"root", root},
        {"D_over_E", safe_div(k.D, k.E)},
        {"half_inv_c", safe_div(1.0, 2.0 * k.c)},
        {"ratio", safe_div(k.D, 8.0 * k.F * raw.H * k.c)},
        {"delay", safe_div(2.0, 3.0 * L * B * N + L * B)},
    };
}

bool feasible(const ObjectiveConstants& oc, const BoundInputs& bi, double gamma,
              std::optional<double> carried, std::string* violated) {
    const Raw raw = evaluate(oc, bi, gamma, carried);
    if (!(raw.block.D > 0.0)) {
        if (violated != nullptr) {
            *violated = "D";
        }
        return false;
    }
    for (const auto& t : terms_from(raw, oc, bi)) {
        if (!(gamma <= t.value)) {
            if (violated != nullptr) {
                *violated = t.name;
            }
            return false;
        }
    }
    return true;
}

}  // namespace

ObjectiveConstants objective_constants(const AggregateObjective& agg, const Box& box, double L_t,
                                       double Delta) {
    ObjectiveConstants oc;
    oc.L = linalg::symmetric_spectral_norm(agg.q_sym);
    oc.max_norm = box.max_norm();
    const double rnorm = agg.r_hat.norm();
    oc.M = oc.L * oc.max_norm + rnorm;
    oc.M_g = 0.5 * oc.L * oc.max_norm * oc.max_norm + rnorm * oc.max_norm + agg.value_offset;
    oc.L_g = oc.M;
    oc.d_X = box.diameter();
    oc.r_X = box.inradius();
    oc.L_t = L_t;
    oc.Delta = Delta;
    return oc;
}

ObjectiveConstants objective_constants(const AggregateObjective& agg, const TimeVaryingQP& qp,
                                       double Delta) {
    return objective_constants(agg, qp.box(), continuous_jump_constant(qp), Delta);
}

ConstantsBlock constants_block(const ObjectiveConstants& oc, const BoundInputs& bi, double gamma,
                               std::optional<double> carried) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw ConfigError("constants_block: step size must lie in (0, 1)");
    }
    const Raw raw = evaluate(oc, bi, gamma, carried);
    if (!(raw.block.D > 0.0)) {
        std::ostringstream msg;
        msg << "constants_block: step size " << gamma << " out of range (D = " << raw.block.D
            << " <= 0)";
        throw ConfigError(msg.str());
    }
    return raw.block;
}

std::vector<GammaMaxTerm> gamma_max_terms(const ObjectiveConstants& oc, const BoundInputs& bi,
                                          double gamma, std::optional<double> carried) {
    return terms_from(evaluate(oc, bi, gamma, carried), oc, bi);
}

GammaMaxResult gamma_max(const ObjectiveConstants& oc, const BoundInputs& bi,
                         std::optional<double> carried) {
    // Every term stays positive as γ → 0⁺, but the carried a_z can push the
    // admissible range far below machine-epsilon scales, hence the deep floor.
    constexpr int kGrid = 1200;
    constexpr double kLow = 1e-300;
    GammaMaxResult out;

    double lo = 0.0;
    double hi = 0.5;
    if (feasible(oc, bi, hi, carried, nullptr)) {
        lo = hi;
    } else {
        // Log grid from kLow to ½; keep the largest feasible point.
        int best = -1;
        std::string first_violation;
        for (int g = 0; g <= kGrid; ++g) {
            const double gamma = kLow * std::pow(0.5 / kLow, static_cast<double>(g) / kGrid);
            std::string violated;
            if (feasible(oc, bi, gamma, carried, &violated)) {
                best = g;
            } else if (g == 0) {
                first_violation = violated;
            }
        }
        if (best < 0) {
            throw ConfigError("gamma_max: no admissible step size; violated term: " + first_violation);
        }
        lo = kLow * std::pow(0.5 / kLow, static_cast<double>(best) / kGrid);
        hi = best == kGrid ? 0.5 : kLow * std::pow(0.5 / kLow, static_cast<double>(best + 1) / kGrid);
        while (hi - lo > 1e-12 * hi) {
            const double mid = 0.5 * (lo + hi);
            if (feasible(oc, bi, mid, carried, nullptr)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    out.gamma_max = lo;
    out.terms = gamma_max_terms(oc, bi, lo, carried);
    double tightest = kInf;
    for (const auto& t : out.terms) {
        if (t.value < tightest) {
            tightest = t.value;
            out.binding = t.name;
        }
    }
    return out;
}

std::vector<double> suboptimality_bound(double a0, const std::vector<double>& rho,
                                   const std::vector<double>& r, const std::vector<double>& K) {
    if (rho.size() != r.size() || rho.size() != K.size()) {
        throw ConfigError("suboptimality_bound: rho, r and K must have equal length");
    }
    std::vector<double> out;
    double acc = a0;
    for (std::size_t z = 0; z < rho.size(); ++z) {
        if (z > 0) {
            acc += K[z];
        }
        acc *= std::pow(rho[z], r[z] - 1.0);
        out.push_back(acc);
    }
    return out;
}

double uub_cap(const std::vector<double>& rho, const std::vector<double>& r,
               const std::vector<double>& K) {
    if (rho.empty()) {
        return 0.0;
    }
    const double rho_max = *std::max_element(rho.begin(), rho.end());
    const double r_min = *std::min_element(r.begin(), r.end());
    const double k_max = K.size() > 1 ? *std::max_element(K.begin() + 1, K.end()) : 0.0;
    const double q = std::pow(rho_max, r_min - 1.0);
    if (!(q < 1.0)) {
        return kInf;
    }
    return k_max * q / (1.0 - q);
}

double k1(Index n, double nu_X, double r_X, double d_X, double phi) {
    if (n < 1) {
        throw ConfigError("k1: dimension must be >= 1");
    }
    const double dn = static_cast<double>(n);
    return phi * phi * std::pow(std::numbers::pi, dn / 2.0) /
           (dn * std::pow(2.0, dn + 3.0) * std::tgamma(dn / 2.0)) * nu_X * std::pow(r_X / d_X, dn);
}

Quadratic envelope(Index n, double M_g) {
    return Quadratic{0.5 * Matrix::Identity(n, n), Vector::Zero(n), M_g};
}

double k2_term(const Quadratic& f, const Quadratic& g, const Quadratic& h, const Box& box) {
    return std::max(l2_distance_squared(f, h, box), l2_distance_squared(f, g, box));
}

double argmin_distance_bound(double l2_sq, double K1, Index n, double u_bar, double phi) {
    if (!(K1 > 0.0) || !(phi > 0.0)) {
        throw ConfigError("argmin_distance_bound: K1 and phi must be positive");
    }
    const double dn = static_cast<double>(n);
    return std::pow(4.0 * u_bar / phi, dn / (2.0 * dn + 4.0)) *
           std::pow(std::max(l2_sq, 0.0) / K1, 1.0 / (2.0 * dn + 4.0));
}

double tracking_error_bound(double a, double rho, double r, double K1, double K2, Index n,
                      double u_bar, double phi) {
    return a * std::pow(rho, r - 1.0) + argmin_distance_bound(K2, K1, n, u_bar, phi);
}

AutoGammaPolicy::AutoGammaPolicy(const TimeVaryingQP& qp, BoundInputs inputs, double Delta,
                                 double fraction)
    : L_t_(continuous_jump_constant(qp)),
      box_(qp.box()),
      inputs_(inputs),
      delta_(Delta),
      fraction_(fraction),
      state_(std::make_shared<State>()) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ConfigError("auto gamma fraction must lie in (0, 1)");
    }
}

double AutoGammaPolicy::operator()(Index z, const AggregateObjective& agg) const {
    if (z == 0) {
        state_->history.clear();
        state_->carried.reset();
    }
    Record rec;
    rec.oc = objective_constants(agg, box_, L_t_, delta_);
    rec.gmax = gamma_max(rec.oc, inputs_, state_->carried);
    const double gamma = fraction_ * rec.gmax.gamma_max;
    rec.block = constants_block(rec.oc, inputs_, gamma, state_->carried);
    state_->carried = rec.block.a * std::pow(rec.block.rho, static_cast<double>(inputs_.r) - 1.0);
    state_->history.push_back(rec);
    return gamma;
}

}  // namespace tvqp
