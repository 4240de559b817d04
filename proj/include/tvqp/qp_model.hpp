#pragma once

#include <string>
#include <variant>
#include <vector>

#include "tvqp/types.hpp"

namespace tvqp {

/// Per-agent block sizes of the decision vector.
class BlockPartition {
public:
    explicit BlockPartition(std::vector<Index> sizes);

    /// `agents` blocks of identical size.
    static BlockPartition uniform(Index agents, Index block_size);

    Index agents() const { return static_cast<Index>(sizes_.size()); }
    Index dim() const { return dim_; }
    Index size(Index i) const { return sizes_[static_cast<std::size_t>(i)]; }
    Index offset(Index i) const { return offsets_[static_cast<std::size_t>(i)]; }
    const std::vector<Index>& sizes() const { return sizes_; }
    const std::vector<Index>& offsets() const { return offsets_; }

    /// Agent owning coordinate j.
    Index owner(Index j) const;

private:
    std::vector<Index> sizes_;
    std::vector<Index> offsets_;
    Index dim_ = 0;
};

/// Axis-aligned box constraint set.
class Box {
public:
    Box(Vector lo, Vector hi);
    static Box cube(Index n, double lo, double hi);

    Index dim() const { return lo_.size(); }
    const Vector& lo() const { return lo_; }
    const Vector& hi() const { return hi_; }

    double diameter() const;
    double inradius() const;
    double volume() const;
    /// max_{x in box} ||x||, attained at the vertex with the largest |coordinate| per axis.
    double max_norm() const;

    bool contains(const Vector& x, double tol = 0.0) const;
    Vector project(const Vector& v) const;
    Vector center() const { return 0.5 * (lo_ + hi_); }

private:
    Vector lo_;
    Vector hi_;
};

/// Q(t) = Q0 + Qc cos(ωt) + Qs sin(ωt),  r(t) = r0 + rc cos(νt) + rs sin(νt).
/// Covers constant problems (zero amplitudes), the cosine-modulated family
/// Q0 + A cos(ωt) with r0 sin(cωt), and the 2×2 nonconvexity example.
struct HarmonicFamily {
    Matrix q0;
    Matrix q_cos;
    Matrix q_sin;
    double omega = 0.0;
    Vector r0;
    Vector r_cos;
    Vector r_sin;
    double r_omega = 0.0;
};

/// ½(z − 1⊗p(t))ᵀ Q0 (z − 1⊗p(t)) with the planar Lissajous reference
/// p(t) = [ax cos(wx t), ay sin(wy t)]. The constant ½pᵀQ0p term is dropped,
/// so r(t) = −Q0 (1⊗p(t)).
struct TrackingFamily {
    Matrix q0;
    double amp_x = 100.0;
    double freq_x = 0.01;
    double amp_y = 100.0;
    double freq_y = 0.03;

    Eigen::Vector2d reference(double t) const;
    Eigen::Vector2d reference_velocity_bound() const;
};

using QpFamily = std::variant<HarmonicFamily, TrackingFamily>;

HarmonicFamily constant_family(Matrix q0, Vector r0);
/// Q0 + A cos(ωt), r(t) = r0 ⊙ sin(c·ω·t).
HarmonicFamily cosine_modulated_family(Matrix q0, Matrix amplitude, double omega, Vector r0,
                                       double r_freq_multiplier);
/// Q(t) = [[1.2 + cos t, sin t], [sin t, 1.2]], r ≡ 0.
HarmonicFamily nonconvexity_example_family();

/// Parametric time-varying QP f(x;t) = ½xᵀQ(t)x + r(t)ᵀx over a box.
class TimeVaryingQP {
public:
    TimeVaryingQP(BlockPartition partition, Box box, QpFamily family, double xi,
                  double value_offset = 0.0);

    const BlockPartition& partition() const { return partition_; }
    const Box& box() const { return box_; }
    const QpFamily& family() const { return family_; }
    double xi() const { return xi_; }
    double value_offset() const { return value_offset_; }
    TimeVaryingQP with_value_offset(double offset) const;

    Index dim() const { return partition_.dim(); }
    Index agents() const { return partition_.agents(); }

    Matrix q(double t) const;
    Vector r(double t) const;
    /// Row block i of Q(t) (n_i × n).
    Matrix q_block(Index i, double t) const;
    Vector r_block(Index i, double t) const;

    /// f(x;t) including value_offset.
    double cost(const Vector& x, double t) const;

    /// Analytic bound on ||Q^[i](t1) − Q^[i](t2)|| / |t1 − t2|.
    double lipschitz_q(Index i) const;
    /// Analytic bound on ||r^[i](t1) − r^[i](t2)|| / |t1 − t2|.
    double lipschitz_r(Index i) const;

    /// Agent pairs whose updates couple: mask(i, j) is true when some row
    /// block i, column block j entry of the family is nonzero.
    std::vector<std::vector<bool>> coupling_mask() const;

    /// Checks symmetry and λ_min(Q(t)) ≥ ξ on `samples` uniform times in
    /// [0, horizon]. Returns human-readable violations (empty when valid).
    std::vector<std::string> validate(double horizon, int samples = 101) const;

private:
    BlockPartition partition_;
    Box box_;
    QpFamily family_;
    double xi_;
    double value_offset_;
};

/// Smallest λ_min(Q(t)) over a uniform time grid; used to derive ξ.
double min_eigenvalue_over_horizon(const TimeVaryingQP& qp, double horizon, int samples = 1001);

/// θ_i(t_z) for every agent at the sample event t_z.
struct SampleState {
    std::vector<double> theta;
    double t_z = 0.0;
};

enum class GradientMode { row_stacked, symmetrized };

GradientMode parse_gradient_mode(const std::string& name);
std::string to_string(GradientMode mode);

/// Row-block-stacked objective g(x;t_z) = ½xᵀQ̂x + r̂ᵀx + offset, where row
/// block i of Q̂ and block i of r̂ come from agent i's latest sample.
struct AggregateObjective {
    BlockPartition partition;
    Matrix q_hat;
    Matrix q_sym;  // ½(Q̂ + Q̂ᵀ), the Hessian of g
    Vector r_hat;
    double value_offset = 0.0;
    SampleState sample_state;

    double t_z() const { return sample_state.t_z; }
};

AggregateObjective build_aggregate(const TimeVaryingQP& qp, const SampleState& state);

/// Aggregate built directly from matrices (tests, oracle studies).
AggregateObjective make_aggregate(const BlockPartition& partition, Matrix q_hat, Vector r_hat,
                                  double value_offset = 0.0);

double eval_cost(const AggregateObjective& agg, const Vector& x);

/// Update direction for block i evaluated at x.
Vector eval_block_direction(const AggregateObjective& agg, Index i, const Vector& x,
                            GradientMode mode);

/// All blocks stacked (n-vector).
Vector eval_direction(const AggregateObjective& agg, const Vector& x, GradientMode mode);

/// Clamp v (length n_i) into block i of the box.
Vector project_box(const Box& box, const BlockPartition& partition, Index i, const Vector& v);

/// L_t = ½ max||x||² Σ L_Q^[i] + max||x|| Σ L_r^[i].
double continuous_jump_constant(const TimeVaryingQP& qp);

}  // namespace tvqp
