#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tvqp/async_schedule.hpp"
#include "tvqp/baselines.hpp"
#include "tvqp/bcd_engine.hpp"
#include "tvqp/bounds.hpp"
#include "tvqp/qp_model.hpp"

namespace tvqp {

/// Raised for unreadable files and nonfinite trace values.
class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sectioned key = value text. `[section]` headers, `#` or `;` comments.
class ConfigFile {
public:
    static ConfigFile parse(const std::string& text);
    static ConfigFile load(const std::filesystem::path& path);

    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    void set(const std::string& section, const std::string& key, const std::string& value);
    const std::map<std::string, std::map<std::string, std::string>>& sections() const { return data_; }

private:
    std::map<std::string, std::map<std::string, std::string>> data_;
};

enum class ProblemFamily { cosine, tracking, constant };

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 1;

    ProblemFamily family = ProblemFamily::cosine;
    Index agents = 10;
    Index block_size = 2;
    double box_lo = -100.0;
    double box_hi = 100.0;
    // cosine / constant
    double omega = 0.1;
    double q_amplitude = 1.0;
    double q_shift = 2.0;
    double r_amplitude = 100.0;
    double r_freq_multiplier = 2.0;
    // tracking
    double q_scale = 10.0;
    double amp_x = 100.0;
    double amp_y = 100.0;
    double freq_x = 0.01;
    double freq_y = 0.03;
    std::optional<double> xi;  // derived from the family when empty

    double t_s = 2.0;
    double horizon = 50.0;
    std::vector<double> p_sample{0.5};

    std::int64_t B = 10;
    std::vector<std::int64_t> kappa{500};
    std::vector<double> p_update{0.6};
    std::vector<double> p_comm{0.6};
    bool coupling_mask = false;

    bool gamma_auto = false;
    double gamma = 1e-3;
    double gamma_fraction = 0.9;
    GradientMode mode = GradientMode::row_stacked;
    std::string x0 = "random";  // random | zero | center
    std::optional<double> x0_lo;
    std::optional<double> x0_hi;

    bool oracle_enabled = true;
    StationaryOptions stationary{};
    double lambda = 1.0;
    bool sigma_from_oracle = false;
    int error_bound_samples = 200;
    std::optional<double> nu_X;

    std::optional<double> consensus_gamma;
    Topology topology = Topology::complete;
};

/// Reads an experiment config; TVQP_SEED in the environment overrides the seed.
ExperimentConfig experiment_config_from(const ConfigFile& file);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Broadcasts a scalar-or-list parameter to one value per agent / interval.
std::vector<double> per_agent(const std::vector<double>& values, Index agents, const char* what);
std::vector<std::int64_t> per_interval(const std::vector<std::int64_t>& values, Index intervals);

TimeVaryingQP build_problem(const ExperimentConfig& cfg);

struct Instance {
    TimeVaryingQP qp;
    SamplingPlan plan;
    AsyncSchedule schedule;
    Vector x0;
};

Instance build_instance(const ExperimentConfig& cfg);

/// Bound inputs for the instance (φ, ψ, ū, ν over all sample events).
BoundInputs bound_inputs(const ExperimentConfig& cfg, const Instance& inst);

GammaPolicy make_gamma_policy(const ExperimentConfig& cfg, const Instance& inst);
OracleProvider make_oracle(const ExperimentConfig& cfg, const TimeVaryingQP& qp);

struct SummaryReport {
    double rms_error = kMissing;
    double avg_before_sample = kMissing;
    double max_error = kMissing;
    double final_alpha = kMissing;
    double final_error = kMissing;
    std::vector<double> alpha_per_interval;
    std::vector<double> error_per_interval;
};

SummaryReport compute_metrics(const RunTrace& trace);

/// %.17g; NaN becomes an empty cell.
std::string format_number(double value);

void write_trace_csv(std::ostream& out, const RunTrace& trace);
std::vector<IterationRow> read_trace_csv(std::istream& in);
void write_intervals_csv(std::ostream& out, const RunTrace& trace);
void write_summary_csv(std::ostream& out, const SummaryReport& s);

/// Writes `text` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

struct ExperimentResult {
    RunTrace trace;
    SummaryReport summary;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct CompareResult {
    ExperimentResult async_bcd;
    ExperimentResult sync_bcd;
    ExperimentResult consensus;
    double consensus_disagreement = 0.0;
};

CompareResult compare(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct SweepRow {
    std::string value;
    SummaryReport summary;
};

/// param ∈ {B, gamma, kappa, p_sample, p_update, p_comm, N}.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& param,
                            const std::vector<std::string>& values,
                            const std::filesystem::path& out_dir);

ExperimentConfig with_parameter(ExperimentConfig cfg, const std::string& param,
                                const std::string& value);

struct BoundsRow {
    Index z = 0;
    double t_z = 0.0;
    ObjectiveConstants oc;
    ConstantsBlock block;
    double gamma_max = 0.0;
    std::string binding;
    bool gamma_admissible = true;
    double alpha_bound = 0.0;
    double error_bound = 0.0;
    double measured_alpha = kMissing;
    double lambda_hat = kMissing;
    double epsilon_hat = kMissing;
    double sigma_hat = kMissing;
};

struct BoundsReport {
    BoundInputs inputs;
    double K1 = 0.0;
    double K2 = 0.0;
    double uub = 0.0;
    std::vector<BoundsRow> rows;
};

BoundsReport bounds_report(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                           std::ostream& log);

struct NonconvexityResult {
    Matrix q_hat;
    Matrix q_sym;
    Vector eigenvalues;
    bool nonconvex = false;
    StationarySet stationary;
};

NonconvexityResult nonconvexity_demo(std::ostream& out);

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// 800×500 SVG line chart with axes, ticks and a legend.
void write_svg_plot(std::ostream& out, const std::string& x_label,
                    const std::vector<PlotSeries>& series);

/// Plots columns of a CSV file; the first column in `cols` is the x axis.
void plot_csv(const std::filesystem::path& csv, const std::filesystem::path& svg,
              const std::vector<std::string>& cols);

}  // namespace tvqp
