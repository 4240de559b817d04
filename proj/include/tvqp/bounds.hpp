#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tvqp/oracle.hpp"
#include "tvqp/qp_model.hpp"
#include "tvqp/types.hpp"

namespace tvqp {

struct ObjectiveConstants {
    double L = 0.0;    // ‖½(Q̂ + Q̂ᵀ)‖₂
    double M = 0.0;    // gradient-norm bound over the box
    double M_g = 0.0;  // cost bound over the box
    double L_g = 0.0;  // Lipschitz constant of g over the box
    double d_X = 0.0;
    double r_X = 0.0;
    double max_norm = 0.0;
    double L_t = 0.0;
    double Delta = 0.0;
};

ObjectiveConstants objective_constants(const AggregateObjective& agg, const Box& box, double L_t,
                                       double Delta);
ObjectiveConstants objective_constants(const AggregateObjective& agg, const TimeVaryingQP& qp,
                                       double Delta);

struct BoundInputs {
    Index N = 1;
    std::int64_t B = 1;
    Index n = 1;
    double lambda = 1.0;
    double sigma = -1.0;  // negative: use d_X
    double epsilon = 0.0;
    std::int64_t kappa = 1;
    std::int64_t r = 1;  // κ = k̂ + rB
    double phi = 1.0;
    double psi = 2.0;
    double u_bar = 1.0;
    double nu_X = 0.5;
};

struct ConstantsBlock {
    double gamma = 0.0;
    double D = 0.0;
    double E = 0.0;
    double F = 0.0;
    double G = 0.0;
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double rho = 1.0;
    double K = 0.0;  // zero for the first interval
};

/// Evaluates the constants at step size gamma. `carried` is a_{z−1}ρ_{z−1}^{r_{z−1}−1}
/// for z > 0 and empty for the first interval. Throws ConfigError when D ≤ 0.
ConstantsBlock constants_block(const ObjectiveConstants& oc, const BoundInputs& bi, double gamma,
                               std::optional<double> carried = std::nullopt);

struct GammaMaxTerm {
    std::string name;
    double value = 0.0;
};

struct GammaMaxResult {
    double gamma_max = 0.0;
    std::string binding;
    std::vector<GammaMaxTerm> terms;  // evaluated at gamma_max
};

/// The eight step-size terms evaluated at gamma (NaN marks an undefined term).
std::vector<GammaMaxTerm> gamma_max_terms(const ObjectiveConstants& oc, const BoundInputs& bi,
                                          double gamma, std::optional<double> carried);

/// Largest γ ∈ (0, ½] below every term, by bisection with a grid fallback.
GammaMaxResult gamma_max(const ObjectiveConstants& oc, const BoundInputs& bi,
                         std::optional<double> carried = std::nullopt);

/// a₀∏_{i≤z}ρ_i^{r_i−1} + Σ_{j=1}^{z} K_j ∏_{k=j}^{z} ρ_k^{r_k−1} for each z.
/// K[0] is ignored.
std::vector<double> suboptimality_bound(double a0, const std::vector<double>& rho,
                                   const std::vector<double>& r, const std::vector<double>& K);

/// Steady-state cap of the accumulated sum: K_max q/(1 − q), q = ρ_max^{r_min−1}.
double uub_cap(const std::vector<double>& rho, const std::vector<double>& r,
               const std::vector<double>& K);

/// φ²π^{n/2}/(n 2^{n+3} Γ(n/2)) ν (r/d)ⁿ.
double k1(Index n, double nu_X, double r_X, double d_X, double phi);

/// max{‖f − h‖², ‖f − g‖²} in L²(box).
double k2_term(const Quadratic& f, const Quadratic& g, const Quadratic& h, const Box& box);

/// h(x) = ½‖x‖² + M_g.
Quadratic envelope(Index n, double M_g);

/// (4ū/φ)^{n/(2n+4)} (l2_sq/K₁)^{1/(2n+4)}.
double argmin_distance_bound(double l2_sq, double K1, Index n, double u_bar, double phi);

/// a ρ^{r−1} + (4ū/φ)^{n/(2n+4)} (K₂/K₁)^{1/(2n+4)}.
double tracking_error_bound(double a, double rho, double r, double K1, double K2, Index n,
                      double u_bar, double phi);

/// Step-size policy: γ_z = fraction · γ_max,z with the a_z recursion carried
/// between intervals. Copies share state, so the engine and the caller see the
/// same block history.
class AutoGammaPolicy {
public:
    AutoGammaPolicy(const TimeVaryingQP& qp, BoundInputs inputs, double Delta, double fraction = 0.9);

    double operator()(Index z, const AggregateObjective& agg) const;

    struct Record {
        ObjectiveConstants oc;
        ConstantsBlock block;
        GammaMaxResult gmax;
    };
    const std::vector<Record>& history() const { return state_->history; }

private:
    struct State {
        std::vector<Record> history;
        std::optional<double> carried;
    };
    double L_t_;
    Box box_;
    BoundInputs inputs_;
    double delta_;
    double fraction_;
    std::shared_ptr<State> state_;
};

}  // namespace tvqp
