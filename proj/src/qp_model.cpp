#include "tvqp/qp_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tvqp/linalg.hpp"

namespace tvqp {

// ---------------------------------------------------------------------------
// BlockPartition / Box

BlockPartition::BlockPartition(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) {
        throw ConfigError("block partition needs at least one agent");
    }
    offsets_.reserve(sizes_.size());
    for (const Index s : sizes_) {
        if (s < 1) {
            throw ConfigError("block sizes must be >= 1");
        }
        offsets_.push_back(dim_);
        dim_ += s;
    }
}

BlockPartition BlockPartition::uniform(Index agents, Index block_size) {
    if (agents < 1) {
        throw ConfigError("number of agents must be >= 1");
    }
    return BlockPartition(std::vector<Index>(static_cast<std::size_t>(agents), block_size));
}

Index BlockPartition::owner(Index j) const {
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), j);
    return static_cast<Index>(it - offsets_.begin()) - 1;
}

Box::Box(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size() || lo_.size() == 0) {
        throw ConfigError("box bounds must be nonempty and of equal length");
    }
    for (Index j = 0; j < lo_.size(); ++j) {
        if (!(lo_(j) < hi_(j)) || !std::isfinite(lo_(j)) || !std::isfinite(hi_(j))) {
            throw ConfigError("box needs finite lo[j] < hi[j] on every axis");
        }
    }
}

Box Box::cube(Index n, double lo, double hi) {
    return Box(Vector::Constant(n, lo), Vector::Constant(n, hi));
}

double Box::diameter() const { return (hi_ - lo_).norm(); }

double Box::inradius() const { return 0.5 * (hi_ - lo_).minCoeff(); }

double Box::volume() const { return (hi_ - lo_).prod(); }

double Box::max_norm() const {
    return lo_.cwiseAbs().cwiseMax(hi_.cwiseAbs()).norm();
}

bool Box::contains(const Vector& x, double tol) const {
    return x.size() == dim() && ((x - lo_).array() >= -tol).all() && ((hi_ - x).array() >= -tol).all();
}

Vector Box::project(const Vector& v) const { return v.cwiseMax(lo_).cwiseMin(hi_); }

// ---------------------------------------------------------------------------
// Families

Eigen::Vector2d TrackingFamily::reference(double t) const {
    return {amp_x * std::cos(freq_x * t), amp_y * std::sin(freq_y * t)};
}

Eigen::Vector2d TrackingFamily::reference_velocity_bound() const {
    return {std::abs(amp_x * freq_x), std::abs(amp_y * freq_y)};
}

HarmonicFamily constant_family(Matrix q0, Vector r0) {
    const Index n = q0.rows();
    HarmonicFamily f;
    f.q0 = std::move(q0);
    f.q_cos = Matrix::Zero(n, n);
    f.q_sin = Matrix::Zero(n, n);
    f.r0 = std::move(r0);
    f.r_cos = Vector::Zero(n);
    f.r_sin = Vector::Zero(n);
    return f;
}

HarmonicFamily cosine_modulated_family(Matrix q0, Matrix amplitude, double omega, Vector r0,
                                       double r_freq_multiplier) {
    const Index n = q0.rows();
    HarmonicFamily f;
    f.q0 = std::move(q0);
    f.q_cos = std::move(amplitude);
    f.q_sin = Matrix::Zero(n, n);
    f.omega = omega;
    f.r0 = Vector::Zero(n);
    f.r_cos = Vector::Zero(n);
    f.r_sin = std::move(r0);
    f.r_omega = r_freq_multiplier * omega;
    return f;
}

HarmonicFamily nonconvexity_example_family() {
    HarmonicFamily f;
    f.q0 = Matrix::Identity(2, 2) * 1.2;
    f.q_cos = Matrix::Zero(2, 2);
    f.q_cos(0, 0) = 1.0;
    f.q_sin = Matrix::Zero(2, 2);
    f.q_sin(0, 1) = 1.0;
    f.q_sin(1, 0) = 1.0;
    f.omega = 1.0;
    f.r0 = Vector::Zero(2);
    f.r_cos = Vector::Zero(2);
    f.r_sin = Vector::Zero(2);
    return f;
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Vector tiled_reference(const TrackingFamily& f, Index n, double t) {
    const Eigen::Vector2d p = f.reference(t);
    Vector out(n);
    for (Index j = 0; j < n; ++j) {
        out(j) = p(j % 2);
    }
    return out;
}

void check_square(const Matrix& m, Index n, const char* what) {
    if (m.rows() != n || m.cols() != n) {
        std::ostringstream msg;
        msg << what << " must be " << n << "x" << n << ", got " << m.rows() << "x" << m.cols();
        throw ConfigError(msg.str());
    }
}

void check_vector(const Vector& v, Index n, const char* what) {
    if (v.size() != n) {
        std::ostringstream msg;
        msg << what << " must have length " << n << ", got " << v.size();
        throw ConfigError(msg.str());
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// TimeVaryingQP

TimeVaryingQP::TimeVaryingQP(BlockPartition partition, Box box, QpFamily family, double xi,
                             double value_offset)
    : partition_(std::move(partition)),
      box_(std::move(box)),
      family_(std::move(family)),
      xi_(xi),
      value_offset_(value_offset) {
    const Index n = partition_.dim();
    if (box_.dim() != n) {
        throw ConfigError("box dimension does not match the block partition");
    }
    if (!(xi_ > 0.0)) {
        throw ConfigError("strong convexity parameter xi must be > 0");
    }
    if (!(value_offset_ >= 0.0)) {
        throw ConfigError("value_offset must be >= 0");
    }
    std::visit(Overloaded{
                   [&](const HarmonicFamily& f) {
                       check_square(f.q0, n, "Q0");
                       check_square(f.q_cos, n, "Q cosine amplitude");
                       check_square(f.q_sin, n, "Q sine amplitude");
                       check_vector(f.r0, n, "r0");
                       check_vector(f.r_cos, n, "r cosine amplitude");
                       check_vector(f.r_sin, n, "r sine amplitude");
                   },
                   [&](const TrackingFamily& f) {
                       check_square(f.q0, n, "Q0");
                       if (n % 2 != 0) {
                           throw ConfigError("tracking family needs an even dimension (planar agents)");
                       }
                   },
               },
               family_);
}

TimeVaryingQP TimeVaryingQP::with_value_offset(double offset) const {
    return TimeVaryingQP(partition_, box_, family_, xi_, offset);
}

Matrix TimeVaryingQP::q(double t) const {
    return std::visit(Overloaded{
                          [&](const HarmonicFamily& f) -> Matrix {
                              return f.q0 + f.q_cos * std::cos(f.omega * t) +
                                     f.q_sin * std::sin(f.omega * t);
                          },
                          [&](const TrackingFamily& f) -> Matrix { return f.q0; },
                      },
                      family_);
}

Vector TimeVaryingQP::r(double t) const {
    return std::visit(Overloaded{
                          [&](const HarmonicFamily& f) -> Vector {
                              return f.r0 + f.r_cos * std::cos(f.r_omega * t) +
                                     f.r_sin * std::sin(f.r_omega * t);
                          },
                          [&](const TrackingFamily& f) -> Vector {
                              return -(f.q0 * tiled_reference(f, dim(), t));
                          },
                      },
                      family_);
}

Matrix TimeVaryingQP::q_block(Index i, double t) const {
    return q(t).middleRows(partition_.offset(i), partition_.size(i));
}

Vector TimeVaryingQP::r_block(Index i, double t) const {
    return r(t).segment(partition_.offset(i), partition_.size(i));
}

double TimeVaryingQP::cost(const Vector& x, double t) const {
    return 0.5 * x.dot(q(t) * x) + r(t).dot(x) + value_offset_;
}

double TimeVaryingQP::lipschitz_q(Index i) const {
    const Index off = partition_.offset(i);
    const Index ni = partition_.size(i);
    return std::visit(
        Overloaded{
            [&](const HarmonicFamily& f) {
                // d/dt of row block i is ω(−Qc sin + Qs cos); Cauchy-Schwarz on (sin, cos).
                const double c = linalg::spectral_norm(f.q_cos.middleRows(off, ni));
                const double s = linalg::spectral_norm(f.q_sin.middleRows(off, ni));
                return std::abs(f.omega) * std::hypot(c, s);
            },
            [&](const TrackingFamily&) { return 0.0; },
        },
        family_);
}

double TimeVaryingQP::lipschitz_r(Index i) const {
    const Index off = partition_.offset(i);
    const Index ni = partition_.size(i);
    return std::visit(
        Overloaded{
            [&](const HarmonicFamily& f) {
                return std::abs(f.r_omega) *
                       std::hypot(f.r_cos.segment(off, ni).norm(), f.r_sin.segment(off, ni).norm());
            },
            [&](const TrackingFamily& f) {
                const double copies = static_cast<double>(dim()) / 2.0;
                const double speed = f.reference_velocity_bound().norm() * std::sqrt(copies);
                return linalg::spectral_norm(f.q0.middleRows(off, ni)) * speed;
            },
        },
        family_);
}

std::vector<std::vector<bool>> TimeVaryingQP::coupling_mask() const {
    const Index N = agents();
    Matrix pattern = std::visit(Overloaded{
                                    [](const HarmonicFamily& f) -> Matrix {
                                        return f.q0.cwiseAbs() + f.q_cos.cwiseAbs() +
                                               f.q_sin.cwiseAbs();
                                    },
                                    [](const TrackingFamily& f) -> Matrix { return f.q0.cwiseAbs(); },
                                },
                                family_);
    std::vector<std::vector<bool>> mask(static_cast<std::size_t>(N),
                                        std::vector<bool>(static_cast<std::size_t>(N), false));
    for (Index i = 0; i < N; ++i) {
        for (Index j = 0; j < N; ++j) {
            if (i == j) {
                continue;
            }
            const double block = pattern.block(partition_.offset(i), partition_.offset(j),
                                               partition_.size(i), partition_.size(j))
                                     .maxCoeff();
            mask[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = block > 0.0;
        }
    }
    return mask;
}

std::vector<std::string> TimeVaryingQP::validate(double horizon, int samples) const {
    std::vector<std::string> issues;
    const int count = std::max(samples, 2);
    for (int s = 0; s < count; ++s) {
        const double t = horizon * static_cast<double>(s) / static_cast<double>(count - 1);
        const Matrix qt = q(t);
        const double asym = (qt - qt.transpose()).norm();
        if (asym > 1e-12) {
            std::ostringstream msg;
            msg << "Q(t) not symmetric at t=" << t << " (||Q-Q^T||=" << asym << ")";
            issues.push_back(msg.str());
        }
        const double lmin = linalg::min_eigenvalue(linalg::symmetric_part(qt));
        if (lmin < xi_) {
            std::ostringstream msg;
            msg << "lambda_min(Q(t))=" << lmin << " < xi=" << xi_ << " at t=" << t;
            issues.push_back(msg.str());
        }
    }
    return issues;
}

double min_eigenvalue_over_horizon(const TimeVaryingQP& qp, double horizon, int samples) {
    double best = std::numeric_limits<double>::infinity();
    const int count = std::max(samples, 2);
    for (int s = 0; s < count; ++s) {
        const double t = horizon * static_cast<double>(s) / static_cast<double>(count - 1);
        best = std::min(best, linalg::min_eigenvalue(linalg::symmetric_part(qp.q(t))));
    }
    return best;
}

GradientMode parse_gradient_mode(const std::string& name) {
    if (name == "row_stacked" || name == "literal") {
        return GradientMode::row_stacked;
    }
    if (name == "symmetrized") {
        return GradientMode::symmetrized;
    }
    throw ConfigError("unknown gradient_mode '" + name + "' (expected row_stacked or symmetrized)");
}

std::string to_string(GradientMode mode) {
    return mode == GradientMode::row_stacked ? "row_stacked" : "symmetrized";
}

// ---------------------------------------------------------------------------
// Aggregate objective

AggregateObjective build_aggregate(const TimeVaryingQP& qp, const SampleState& state) {
    const BlockPartition& part = qp.partition();
    if (static_cast<Index>(state.theta.size()) != part.agents()) {
        std::ostringstream msg;
        msg << "sample state has " << state.theta.size() << " entries but the partition has "
            << part.agents() << " agents";
        throw ConfigError(msg.str());
    }
    const Index n = part.dim();
    AggregateObjective agg{part, Matrix(n, n), Matrix(), Vector(n), qp.value_offset(), state};
    for (Index i = 0; i < part.agents(); ++i) {
        const double theta = state.theta[static_cast<std::size_t>(i)];
        agg.q_hat.middleRows(part.offset(i), part.size(i)) = qp.q_block(i, theta);
        agg.r_hat.segment(part.offset(i), part.size(i)) = qp.r_block(i, theta);
    }
    agg.q_sym = linalg::symmetric_part(agg.q_hat);
    return agg;
}

AggregateObjective make_aggregate(const BlockPartition& partition, Matrix q_hat, Vector r_hat,
                                  double value_offset) {
    const Index n = partition.dim();
    check_square(q_hat, n, "q_hat");
    check_vector(r_hat, n, "r_hat");
    SampleState state{std::vector<double>(static_cast<std::size_t>(partition.agents()), 0.0), 0.0};
    Matrix sym = linalg::symmetric_part(q_hat);
    return AggregateObjective{partition, std::move(q_hat), std::move(sym), std::move(r_hat),
                              value_offset, std::move(state)};
}

double eval_cost(const AggregateObjective& agg, const Vector& x) {
    if (x.size() != agg.q_hat.rows()) {
        throw ConfigError("eval_cost: dimension mismatch");
    }
    return 0.5 * x.dot(agg.q_hat * x) + agg.r_hat.dot(x) + agg.value_offset;
}

Vector eval_block_direction(const AggregateObjective& agg, Index i, const Vector& x,
                            GradientMode mode) {
    if (x.size() != agg.q_hat.rows()) {
        throw ConfigError("eval_block_direction: dimension mismatch");
    }
    const Index off = agg.partition.offset(i);
    const Index ni = agg.partition.size(i);
    const Matrix& m = mode == GradientMode::row_stacked ? agg.q_hat : agg.q_sym;
    return m.middleRows(off, ni) * x + agg.r_hat.segment(off, ni);
}

Vector eval_direction(const AggregateObjective& agg, const Vector& x, GradientMode mode) {
    const Matrix& m = mode == GradientMode::row_stacked ? agg.q_hat : agg.q_sym;
    return m * x + agg.r_hat;
}

Vector project_box(const Box& box, const BlockPartition& partition, Index i, const Vector& v) {
    const Index off = partition.offset(i);
    const Index ni = partition.size(i);
    if (v.size() != ni) {
        throw ConfigError("project_box: block length mismatch");
    }
    return v.cwiseMax(box.lo().segment(off, ni)).cwiseMin(box.hi().segment(off, ni));
}

double continuous_jump_constant(const TimeVaryingQP& qp) {
    double sum_q = 0.0;
    double sum_r = 0.0;
    for (Index i = 0; i < qp.agents(); ++i) {
        sum_q += qp.lipschitz_q(i);
        sum_r += qp.lipschitz_r(i);
    }
    const double xmax = qp.box().max_norm();
    return 0.5 * xmax * xmax * sum_q + xmax * sum_r;
}

}  // namespace tvqp
