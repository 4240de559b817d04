#include "tvqp/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "tvqp/linalg.hpp"

namespace tvqp {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config file

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": expected a number, got '" + text + "'");
    }
}

std::int64_t parse_int(const std::string& text, const std::string& what) {
    const double v = parse_double(text, what);
    if (v != std::floor(v) || std::abs(v) > 9e15) {
        throw ConfigError(what + ": expected an integer, got '" + text + "'");
    }
    return static_cast<std::int64_t>(v);
}

bool parse_bool(const std::string& text, const std::string& what) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no" || text == "off") {
        return false;
    }
    throw ConfigError(what + ": expected true or false, got '" + text + "'");
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) {
        out.push_back(parse_double(item, what));
    }
    if (out.empty()) {
        throw ConfigError(what + ": empty list");
    }
    return out;
}

std::vector<std::int64_t> parse_ints(const std::string& text, const std::string& what) {
    std::vector<std::int64_t> out;
    for (const auto& item : split(text, ',')) {
        out.push_back(parse_int(item, what));
    }
    if (out.empty()) {
        throw ConfigError(what + ": empty list");
    }
    return out;
}

ProblemFamily parse_family(const std::string& name) {
    if (name == "cosine") {
        return ProblemFamily::cosine;
    }
    if (name == "tracking") {
        return ProblemFamily::tracking;
    }
    if (name == "constant") {
        return ProblemFamily::constant;
    }
    throw ConfigError("unknown problem family '" + name + "' (expected cosine, tracking or constant)");
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line;
    std::string section = "global";
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        }
        cfg.data_[section][key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

ConfigFile ConfigFile::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ReportError("cannot read config file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::optional<std::string> ConfigFile::get(const std::string& section, const std::string& key) const {
    const auto s = data_.find(section);
    if (s == data_.end()) {
        return std::nullopt;
    }
    const auto k = s->second.find(key);
    if (k == s->second.end()) {
        return std::nullopt;
    }
    return k->second;
}

void ConfigFile::set(const std::string& section, const std::string& key, const std::string& value) {
    data_[section][key] = value;
}

// ---------------------------------------------------------------------------
// Experiment config

ExperimentConfig experiment_config_from(const ConfigFile& file) {
    static const std::map<std::string, std::vector<std::string>> known = {
        {"experiment", {"name", "seed"}},
        {"problem",
         {"family", "agents", "block_size", "box_lo", "box_hi", "omega", "q_amplitude", "q_shift",
          "r_amplitude", "r_freq_multiplier", "q_scale", "amp_x", "amp_y", "freq_x", "freq_y", "xi"}},
        {"sampling", {"t_s", "horizon", "p_sample"}},
        {"schedule", {"B", "kappa", "p_update", "p_comm", "mask"}},
        {"solver", {"gamma", "gamma_fraction", "gradient_mode", "x0", "x0_lo", "x0_hi"}},
        {"oracle",
         {"enabled", "multistarts", "tol", "dedup_radius", "max_iterations", "lambda", "sigma",
          "error_bound_samples", "nu"}},
        {"consensus", {"gamma", "topology"}},
    };
    for (const auto& [section, keys] : file.sections()) {
        const auto it = known.find(section);
        if (it == known.end()) {
            throw ConfigError("unknown config section [" + section + "]");
        }
        for (const auto& [key, value] : keys) {
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
                throw ConfigError("unknown config key '" + key + "' in [" + section + "]");
            }
        }
    }

    ExperimentConfig c;
    auto str = [&](const char* s, const char* k) { return file.get(s, k); };
    auto num = [&](const char* s, const char* k, double& target) {
        if (auto v = str(s, k)) {
            target = parse_double(*v, std::string(s) + "." + k);
        }
    };
    auto integer = [&](const char* s, const char* k, auto& target) {
        if (auto v = str(s, k)) {
            target = static_cast<std::remove_reference_t<decltype(target)>>(
                parse_int(*v, std::string(s) + "." + k));
        }
    };

    if (auto v = str("experiment", "name")) {
        c.name = *v;
    }
    if (auto v = str("experiment", "seed")) {
        c.seed = static_cast<std::uint64_t>(parse_int(*v, "experiment.seed"));
    }
    if (auto v = str("problem", "family")) {
        c.family = parse_family(*v);
    }
    integer("problem", "agents", c.agents);
    integer("problem", "block_size", c.block_size);
    num("problem", "box_lo", c.box_lo);
    num("problem", "box_hi", c.box_hi);
    num("problem", "omega", c.omega);
    num("problem", "q_amplitude", c.q_amplitude);
    num("problem", "q_shift", c.q_shift);
    num("problem", "r_amplitude", c.r_amplitude);
    num("problem", "r_freq_multiplier", c.r_freq_multiplier);
    num("problem", "q_scale", c.q_scale);
    num("problem", "amp_x", c.amp_x);
    num("problem", "amp_y", c.amp_y);
    num("problem", "freq_x", c.freq_x);
    num("problem", "freq_y", c.freq_y);
    if (auto v = str("problem", "xi"); v && *v != "auto") {
        c.xi = parse_double(*v, "problem.xi");
    }
    num("sampling", "t_s", c.t_s);
    num("sampling", "horizon", c.horizon);
    if (auto v = str("sampling", "p_sample")) {
        c.p_sample = parse_doubles(*v, "sampling.p_sample");
    }
    integer("schedule", "B", c.B);
    if (auto v = str("schedule", "kappa")) {
        c.kappa = parse_ints(*v, "schedule.kappa");
    }
    if (auto v = str("schedule", "p_update")) {
        c.p_update = parse_doubles(*v, "schedule.p_update");
    }
    if (auto v = str("schedule", "p_comm")) {
        c.p_comm = parse_doubles(*v, "schedule.p_comm");
    }
    if (auto v = str("schedule", "mask")) {
        if (*v != "all" && *v != "coupling") {
            throw ConfigError("schedule.mask: expected all or coupling");
        }
        c.coupling_mask = *v == "coupling";
    }
    if (auto v = str("solver", "gamma")) {
        if (*v == "auto") {
            c.gamma_auto = true;
        } else {
            c.gamma = parse_double(*v, "solver.gamma");
        }
    }
    num("solver", "gamma_fraction", c.gamma_fraction);
    if (auto v = str("solver", "gradient_mode")) {
        c.mode = parse_gradient_mode(*v);
    }
    if (auto v = str("solver", "x0")) {
        if (*v != "random" && *v != "zero" && *v != "center") {
            throw ConfigError("solver.x0: expected random, zero or center");
        }
        c.x0 = *v;
    }
    if (auto v = str("solver", "x0_lo")) {
        c.x0_lo = parse_double(*v, "solver.x0_lo");
    }
    if (auto v = str("solver", "x0_hi")) {
        c.x0_hi = parse_double(*v, "solver.x0_hi");
    }
    if (auto v = str("oracle", "enabled")) {
        c.oracle_enabled = parse_bool(*v, "oracle.enabled");
    }
    integer("oracle", "multistarts", c.stationary.multistarts);
    num("oracle", "tol", c.stationary.tol);
    num("oracle", "dedup_radius", c.stationary.dedup_radius);
    integer("oracle", "max_iterations", c.stationary.max_iterations);
    num("oracle", "lambda", c.lambda);
    if (auto v = str("oracle", "sigma")) {
        if (*v != "diameter" && *v != "oracle") {
            throw ConfigError("oracle.sigma: expected diameter or oracle");
        }
        c.sigma_from_oracle = *v == "oracle";
    }
    integer("oracle", "error_bound_samples", c.error_bound_samples);
    if (auto v = str("oracle", "nu"); v && *v != "auto") {
        c.nu_X = parse_double(*v, "oracle.nu");
    }
    if (auto v = str("consensus", "gamma"); v && *v != "auto") {
        c.consensus_gamma = parse_double(*v, "consensus.gamma");
    }
    if (auto v = str("consensus", "topology")) {
        c.topology = parse_topology(*v);
    }

    if (const char* env = std::getenv("TVQP_SEED"); env != nullptr && *env != '\0') {
        c.seed = static_cast<std::uint64_t>(parse_int(env, "TVQP_SEED"));
    }

    if (c.agents < 1 || c.block_size < 1) {
        throw ConfigError("problem.agents and problem.block_size must be >= 1");
    }
    if (c.family == ProblemFamily::tracking && c.block_size != 2) {
        throw ConfigError("the tracking family needs block_size = 2");
    }
    if (c.B < 1) {
        throw ConfigError("schedule.B must be >= 1");
    }
    if (!c.gamma_auto && !(c.gamma > 0.0)) {
        throw ConfigError("solver.gamma must be positive");
    }
    if (!(c.gamma_fraction > 0.0 && c.gamma_fraction < 1.0)) {
        throw ConfigError("solver.gamma_fraction must lie in (0, 1)");
    }
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    return experiment_config_from(ConfigFile::load(path));
}

std::vector<double> per_agent(const std::vector<double>& values, Index agents, const char* what) {
    if (values.size() == 1) {
        return std::vector<double>(static_cast<std::size_t>(agents), values.front());
    }
    if (static_cast<Index>(values.size()) != agents) {
        throw ConfigError(std::string(what) + ": give one value or one per agent");
    }
    return values;
}

std::vector<std::int64_t> per_interval(const std::vector<std::int64_t>& values, Index intervals) {
    if (values.size() == 1) {
        return std::vector<std::int64_t>(static_cast<std::size_t>(intervals), values.front());
    }
    if (static_cast<Index>(values.size()) != intervals) {
        throw ConfigError("schedule.kappa: give one value or one per sample event");
    }
    return values;
}

// ---------------------------------------------------------------------------
// Instances

namespace {

constexpr std::uint64_t kProblemStream = 0x51;

Matrix random_spd(Index n, double shift, std::uint64_t seed) {
    Rng rng = make_rng(seed, kProblemStream);
    Matrix m(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            m(i, j) = standard_normal(rng);
        }
    }
    Matrix q = m.transpose() * m + shift * Matrix::Identity(n, n);
    return linalg::symmetric_part(q);
}

}  // namespace

TimeVaryingQP build_problem(const ExperimentConfig& cfg) {
    BlockPartition part = BlockPartition::uniform(cfg.agents, cfg.block_size);
    const Index n = part.dim();
    Box box = Box::cube(n, cfg.box_lo, cfg.box_hi);
    QpFamily family;
    switch (cfg.family) {
        case ProblemFamily::cosine:
            family = cosine_modulated_family(random_spd(n, cfg.q_shift, cfg.seed),
                                             cfg.q_amplitude * Matrix::Identity(n, n), cfg.omega,
                                             Vector::Constant(n, cfg.r_amplitude),
                                             cfg.r_freq_multiplier);
            break;
        case ProblemFamily::constant: {
            Rng rng = make_rng(cfg.seed, kProblemStream + 1);
            Vector r(n);
            for (Index j = 0; j < n; ++j) {
                r(j) = cfg.r_amplitude * uniform(rng, -1.0, 1.0);
            }
            family = constant_family(random_spd(n, cfg.q_shift, cfg.seed), r);
            break;
        }
        case ProblemFamily::tracking: {
            TrackingFamily t;
            t.q0 = cfg.q_scale * Matrix::Identity(n, n);
            t.amp_x = cfg.amp_x;
            t.amp_y = cfg.amp_y;
            t.freq_x = cfg.freq_x;
            t.freq_y = cfg.freq_y;
            family = t;
            break;
        }
    }
    TimeVaryingQP probe(part, box, family, 1.0);
    const double xi = cfg.xi ? *cfg.xi : min_eigenvalue_over_horizon(probe, cfg.horizon);
    if (!(xi > 0.0)) {
        throw ConfigError("problem family is not uniformly positive definite over the horizon");
    }
    return TimeVaryingQP(std::move(part), std::move(box), std::move(family), xi);
}

Instance build_instance(const ExperimentConfig& cfg) {
    TimeVaryingQP qp = build_problem(cfg);
    SamplingPlan plan = generate_sampling(cfg.seed, cfg.t_s, cfg.horizon,
                                          per_agent(cfg.p_sample, cfg.agents, "sampling.p_sample"));
    ScheduleParams sp;
    sp.agents = cfg.agents;
    sp.B = cfg.B;
    sp.kappa = per_interval(cfg.kappa, plan.events());
    sp.p_update = per_agent(cfg.p_update, cfg.agents, "schedule.p_update");
    sp.p_comm = per_agent(cfg.p_comm, cfg.agents, "schedule.p_comm");
    if (cfg.coupling_mask) {
        sp.mask = qp.coupling_mask();
    }
    AsyncSchedule schedule = generate_schedule(cfg.seed, sp);
    Vector x0;
    if (cfg.x0 == "zero") {
        x0 = qp.box().project(Vector::Zero(qp.dim()));
    } else if (cfg.x0 == "center") {
        x0 = qp.box().center();
    } else {
        x0 = random_initial_state(qp.box(), cfg.seed, cfg.x0_lo, cfg.x0_hi);
    }
    return Instance{std::move(qp), std::move(plan), std::move(schedule), std::move(x0)};
}

BoundInputs bound_inputs(const ExperimentConfig& cfg, const Instance& inst) {
    BoundInputs bi;
    bi.N = inst.qp.agents();
    bi.B = inst.schedule.B;
    bi.n = inst.qp.dim();
    bi.lambda = cfg.lambda;
    bi.kappa = inst.schedule.kappa.front();
    bi.r = std::max<std::int64_t>(1, bi.kappa / bi.B);
    bi.phi = std::min(inst.qp.xi(), 1.0);
    double psi = 1.0;
    double u_bar = inst.qp.box().max_norm();
    const double L_t = continuous_jump_constant(inst.qp);
    for (Index z = 0; z < inst.plan.events(); ++z) {
        const auto oc = objective_constants(build_aggregate(inst.qp, inst.plan.state(z)), inst.qp.box(),
                                            L_t, inst.plan.delta);
        psi = std::max(psi, oc.L);
        u_bar = std::max(u_bar, oc.M);
    }
    bi.psi = psi > bi.phi ? psi : bi.phi * (1.0 + 1e-9);
    bi.u_bar = u_bar;
    bi.nu_X = cfg.nu_X ? *cfg.nu_X : std::pow(2.0, -static_cast<double>(bi.n));
    return bi;
}

GammaPolicy make_gamma_policy(const ExperimentConfig& cfg, const Instance& inst) {
    if (!cfg.gamma_auto) {
        return fixed_gamma(cfg.gamma);
    }
    return AutoGammaPolicy(inst.qp, bound_inputs(cfg, inst), inst.plan.delta, cfg.gamma_fraction);
}

OracleProvider make_oracle(const ExperimentConfig& cfg, const TimeVaryingQP& qp) {
    if (!cfg.oracle_enabled) {
        return {};
    }
    return default_oracle(qp, cfg.stationary);
}

// ---------------------------------------------------------------------------
// Metrics and CSV

SummaryReport compute_metrics(const RunTrace& trace) {
    SummaryReport s;
    double sum_sq = 0.0;
    double max_err = 0.0;
    std::size_t count = 0;
    for (const auto& r : trace.rows) {
        if (std::isnan(r.err_opt)) {
            continue;
        }
        sum_sq += r.err_opt * r.err_opt;
        max_err = std::max(max_err, r.err_opt);
        ++count;
    }
    if (count > 0) {
        s.rms_error = std::sqrt(sum_sq / static_cast<double>(count));
        s.max_error = max_err;
    }
    double before = 0.0;
    std::size_t before_count = 0;
    for (const auto& iv : trace.intervals) {
        s.alpha_per_interval.push_back(iv.end_alpha);
        s.error_per_interval.push_back(iv.end_err);
        if (!std::isnan(iv.end_err)) {
            before += iv.end_err;
            ++before_count;
        }
    }
    if (before_count > 0) {
        s.avg_before_sample = before / static_cast<double>(before_count);
    }
    if (!trace.intervals.empty()) {
        s.final_alpha = trace.intervals.back().end_alpha;
        s.final_error = trace.intervals.back().end_err;
    }
    return s;
}

std::string format_number(double value) {
    if (std::isnan(value)) {
        return "";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
    out << "k,z,t_z,cost,s_norm,beta,alpha,err_opt\n";
    for (const auto& r : trace.rows) {
        if (!std::isfinite(r.cost) || !std::isfinite(r.s_norm) || !std::isfinite(r.beta) ||
            std::isinf(r.alpha) || std::isinf(r.err_opt)) {
            throw ReportError("nonfinite value in trace at k=" + std::to_string(r.k));
        }
        out << r.k << ',' << r.z << ',' << format_number(r.t_z) << ',' << format_number(r.cost) << ','
            << format_number(r.s_norm) << ',' << format_number(r.beta) << ','
            << format_number(r.alpha) << ',' << format_number(r.err_opt) << '\n';
    }
}

std::vector<IterationRow> read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != "k,z,t_z,cost,s_norm,beta,alpha,err_opt") {
        throw ReportError("trace CSV: unexpected header");
    }
    auto cell = [](const std::string& s) {
        return s.empty() ? kMissing : std::strtod(s.c_str(), nullptr);
    };
    std::vector<IterationRow> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::string item;
        std::istringstream ls(line);
        while (std::getline(ls, item, ',')) {
            f.push_back(item);
        }
        while (f.size() < 8) {
            f.emplace_back();
        }
        IterationRow r;
        r.k = std::stoll(f[0]);
        r.z = static_cast<Index>(std::stoll(f[1]));
        r.t_z = cell(f[2]);
        r.cost = cell(f[3]);
        r.s_norm = cell(f[4]);
        r.beta = cell(f[5]);
        r.alpha = cell(f[6]);
        r.err_opt = cell(f[7]);
        rows.push_back(r);
    }
    return rows;
}

void write_intervals_csv(std::ostream& out, const RunTrace& trace) {
    out << "z,t_z,gamma,q_hat_fingerprint,begin,end,end_cost,end_alpha,end_err\n";
    for (const auto& iv : trace.intervals) {
        out << iv.z << ',' << format_number(iv.t_z) << ',' << format_number(iv.gamma) << ','
            << format_number(iv.q_hat_fingerprint) << ',' << iv.begin << ',' << iv.end << ','
            << format_number(iv.end_cost) << ',' << format_number(iv.end_alpha) << ','
            << format_number(iv.end_err) << '\n';
    }
}

void write_summary_csv(std::ostream& out, const SummaryReport& s) {
    out << "metric,value\n";
    out << "rms_error," << format_number(s.rms_error) << '\n';
    out << "avg_before_sample," << format_number(s.avg_before_sample) << '\n';
    out << "max_error," << format_number(s.max_error) << '\n';
    out << "final_alpha," << format_number(s.final_alpha) << '\n';
    out << "final_error," << format_number(s.final_error) << '\n';
}

void write_file_atomic(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ReportError("cannot write " + tmp.string());
        }
        out << text;
        if (!out) {
            throw ReportError("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

namespace {

template <class Fn>
std::string render(Fn&& fn) {
    std::ostringstream out;
    fn(out);
    return out.str();
}

void emit_run(const fs::path& dir, const std::string& stem, const ExperimentResult& r) {
    write_file_atomic(dir / (stem + ".csv"), render([&](std::ostream& o) { write_trace_csv(o, r.trace); }));
    write_file_atomic(dir / (stem + "_intervals.csv"),
                      render([&](std::ostream& o) { write_intervals_csv(o, r.trace); }));
    write_file_atomic(dir / (stem + "_summary.csv"),
                      render([&](std::ostream& o) { write_summary_csv(o, r.summary); }));
}

ExperimentResult run_async(const ExperimentConfig& cfg, const Instance& inst) {
    EngineOptions opts;
    opts.mode = cfg.mode;
    opts.oracle = make_oracle(cfg, inst.qp);
    ExperimentResult r;
    r.trace = run(inst.qp, inst.plan, inst.schedule, make_gamma_policy(cfg, inst), inst.x0, opts);
    r.summary = compute_metrics(r.trace);
    return r;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
    const Instance inst = build_instance(cfg);
    ExperimentResult r = run_async(cfg, inst);
    emit_run(out_dir, "trace", r);
    return r;
}

CompareResult compare(const ExperimentConfig& cfg, const fs::path& out_dir) {
    const Instance inst = build_instance(cfg);
    CompareResult out;
    out.async_bcd = run_async(cfg, inst);

    // Both baselines reuse the step sizes the async run actually used.
    const double gamma = out.async_bcd.trace.intervals.front().gamma;
    const OracleProvider oracle = make_oracle(cfg, inst.qp);
    out.sync_bcd.trace = run_sync_bcd(inst.qp, inst.plan, inst.schedule.kappa, gamma, inst.x0, cfg.mode, oracle);
    out.sync_bcd.summary = compute_metrics(out.sync_bcd.trace);

    ConsensusConfig cc;
    cc.weights = metropolis_weights(inst.qp.agents(), cfg.topology);
    cc.gamma = cfg.consensus_gamma ? *cfg.consensus_gamma : gamma;
    out.consensus.trace = run_consensus(inst.qp, inst.plan, cc, inst.schedule.kappa, inst.x0, oracle,
                                        &out.consensus_disagreement);
    out.consensus.summary = compute_metrics(out.consensus.trace);

    emit_run(out_dir, "trace_async", out.async_bcd);
    emit_run(out_dir, "trace_sync", out.sync_bcd);
    emit_run(out_dir, "trace_consensus", out.consensus);
    write_file_atomic(out_dir / "compare_summary.csv", render([&](std::ostream& o) {
        o << "algorithm,rms_error,avg_before_sample,final_error,final_alpha\n";
        auto line = [&](const char* name, const SummaryReport& s) {
            o << name << ',' << format_number(s.rms_error) << ',' << format_number(s.avg_before_sample)
              << ',' << format_number(s.final_error) << ',' << format_number(s.final_alpha) << '\n';
        };
        line("async_bcd", out.async_bcd.summary);
        line("sync_bcd", out.sync_bcd.summary);
        line("consensus", out.consensus.summary);
    }));
    return out;
}

ExperimentConfig with_parameter(ExperimentConfig cfg, const std::string& param,
                                const std::string& value) {
    const std::string what = "sweep value for " + param;
    if (param == "B") {
        cfg.B = parse_int(value, what);
    } else if (param == "gamma") {
        cfg.gamma_auto = false;
        cfg.gamma = parse_double(value, what);
    } else if (param == "kappa") {
        cfg.kappa = {parse_int(value, what)};
    } else if (param == "p_sample") {
        cfg.p_sample = {parse_double(value, what)};
    } else if (param == "p_update") {
        cfg.p_update = {parse_double(value, what)};
    } else if (param == "p_comm") {
        cfg.p_comm = {parse_double(value, what)};
    } else if (param == "N") {
        cfg.agents = parse_int(value, what);
        if (cfg.p_sample.size() > 1 || cfg.p_update.size() > 1 || cfg.p_comm.size() > 1) {
            throw ConfigError("sweeping N needs scalar per-agent probabilities");
        }
    } else {
        throw ConfigError("unknown sweep parameter '" + param +
                          "' (expected B, gamma, kappa, p_sample, p_update, p_comm or N)");
    }
    return cfg;
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& param,
                            const std::vector<std::string>& values, const fs::path& out_dir) {
    if (values.empty()) {
        throw ConfigError("sweep needs at least one value");
    }
    std::vector<ExperimentConfig> configs;
    for (const auto& v : values) {
        configs.push_back(with_parameter(cfg, param, v));
    }
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const Instance inst = build_instance(configs[i]);
        ExperimentResult r = run_async(configs[i], inst);
        emit_run(out_dir, "trace_" + param + "_" + values[i], r);
        rows.push_back({values[i], r.summary});
    }
    write_file_atomic(out_dir / ("sweep_" + param + ".csv"), render([&](std::ostream& o) {
        o << param << ",rms_error,avg_before_sample,final_error,final_alpha\n";
        for (const auto& r : rows) {
            o << r.value << ',' << format_number(r.summary.rms_error) << ','
              << format_number(r.summary.avg_before_sample) << ','
              << format_number(r.summary.final_error) << ',' << format_number(r.summary.final_alpha)
              << '\n';
        }
    }));
    return rows;
}

// ---------------------------------------------------------------------------
// Bounds report

BoundsReport bounds_report(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    Instance inst = build_instance(cfg);
    const Index T = inst.plan.events();

    // Raise the cost offset so every aggregate is nonnegative over the box.
    std::vector<StationarySet> sets;
    double lowest = 0.0;
    for (Index z = 0; z < T; ++z) {
        sets.push_back(find_stationary_set(build_aggregate(inst.qp, inst.plan.state(z)), inst.qp.box(),
                                           cfg.stationary));
        lowest = std::min(lowest, *std::min_element(sets.back().costs.begin(), sets.back().costs.end()));
    }
    const double offset = std::max(0.0, -lowest);
    inst.qp = inst.qp.with_value_offset(offset);
    for (auto& s : sets) {
        for (auto& c : s.costs) {
            c += offset;
        }
    }

    BoundsReport rep;
    rep.inputs = bound_inputs(cfg, inst);
    const double d_X = inst.qp.box().diameter();
    const double r_X = inst.qp.box().inradius();
    const Index n = inst.qp.dim();
    rep.K1 = k1(n, rep.inputs.nu_X, r_X, d_X, rep.inputs.phi);

    EngineOptions opts;
    opts.mode = cfg.mode;
    opts.oracle = [&sets](Index z, const AggregateObjective&) {
        IntervalOracle o;
        o.stationary = sets[static_cast<std::size_t>(z)];
        return o;
    };
    const RunTrace trace = run(inst.qp, inst.plan, inst.schedule, make_gamma_policy(cfg, inst), inst.x0, opts);

    std::optional<double> carried;
    std::vector<double> rhos;
    std::vector<double> rs;
    std::vector<double> Ks;
    for (Index z = 0; z < T; ++z) {
        const AggregateObjective& agg = trace.aggregates[static_cast<std::size_t>(z)];
        BoundsRow row;
        row.z = z;
        row.t_z = agg.t_z();
        row.oc = objective_constants(agg, inst.qp, inst.plan.delta);
        BoundInputs bi = rep.inputs;
        bi.kappa = inst.schedule.kappa[static_cast<std::size_t>(z)];
        bi.r = std::max<std::int64_t>(1, bi.kappa / bi.B);
        const StationarySet& set = sets[static_cast<std::size_t>(z)];
        if (z > 0) {
            row.sigma_hat = estimate_sigma(sets[static_cast<std::size_t>(z - 1)], set, d_X);
            if (cfg.sigma_from_oracle) {
                bi.sigma = row.sigma_hat;
            }
        }
        row.epsilon_hat = estimate_separation(set);
        row.lambda_hat = estimate_error_bound_constant(agg, inst.qp.box(), set, cfg.error_bound_samples,
                                                       cfg.seed + static_cast<std::uint64_t>(z))
                             .lambda;
        const GammaMaxResult gm = gamma_max(row.oc, bi, carried);
        row.gamma_max = gm.gamma_max;
        row.binding = gm.binding;
        const double used = trace.intervals[static_cast<std::size_t>(z)].gamma;
        row.gamma_admissible = used < gm.gamma_max;
        const double gamma = row.gamma_admissible ? used : cfg.gamma_fraction * gm.gamma_max;
        row.block = constants_block(row.oc, bi, gamma, carried);
        row.alpha_bound = row.block.a * std::pow(row.block.rho, static_cast<double>(bi.r) - 1.0);
        carried = row.alpha_bound;
        row.measured_alpha = trace.intervals[static_cast<std::size_t>(z)].end_alpha;

        const Quadratic f = quadratic_from_cost(inst.qp.q(row.t_z), inst.qp.r(row.t_z), offset);
        const Quadratic g = quadratic_from_cost(agg.q_hat, agg.r_hat, offset);
        rep.K2 = std::max(rep.K2, k2_term(f, g, envelope(n, row.oc.M_g), inst.qp.box()));
        rhos.push_back(row.block.rho);
        rs.push_back(static_cast<double>(bi.r));
        Ks.push_back(row.block.K);
        rep.rows.push_back(row);
    }
    rep.uub = uub_cap(rhos, rs, Ks);
    for (auto& row : rep.rows) {
        const double floor = argmin_distance_bound(rep.K2, rep.K1, n, rep.inputs.u_bar, rep.inputs.phi);
        row.error_bound = row.alpha_bound + floor;
    }

    const std::string csv = render([&](std::ostream& o) {
        o << "z,t_z,L_z,M_z,gamma,gamma_max,binding,gamma_admissible,D,E,F,G,a,b,c,rho,K,alpha_bound,error_bound,"
             "alpha,lambda_hat,epsilon_hat,sigma_hat\n";
        for (const auto& r : rep.rows) {
            o << r.z << ',' << format_number(r.t_z) << ',' << format_number(r.oc.L) << ','
              << format_number(r.oc.M) << ',' << format_number(r.block.gamma) << ','
              << format_number(r.gamma_max) << ',' << r.binding << ',' << (r.gamma_admissible ? 1 : 0)
              << ',' << format_number(r.block.D) << ',' << format_number(r.block.E) << ','
              << format_number(r.block.F) << ',' << format_number(r.block.G) << ','
              << format_number(r.block.a) << ',' << format_number(r.block.b) << ','
              << format_number(r.block.c) << ',' << format_number(r.block.rho) << ','
              << format_number(r.block.K) << ',' << format_number(r.alpha_bound) << ','
              << format_number(r.error_bound) << ',' << format_number(r.measured_alpha) << ','
              << format_number(r.lambda_hat) << ',' << format_number(r.epsilon_hat) << ','
              << format_number(r.sigma_hat) << '\n';
        }
    });
    write_file_atomic(out_dir / "bounds.csv", csv);

    log << "value_offset " << format_number(offset) << "  phi " << format_number(rep.inputs.phi)
        << "  psi " << format_number(rep.inputs.psi) << "  u_bar " << format_number(rep.inputs.u_bar)
        << "  nu_X " << format_number(rep.inputs.nu_X) << "\n";
    log << "K1 " << format_number(rep.K1) << "  K2 " << format_number(rep.K2) << "  UUB cap "
        << format_number(rep.uub) << "  (r_z = kappa div B; lambda = " << format_number(rep.inputs.lambda)
        << ")\n";
    log << std::setw(4) << "z" << std::setw(9) << "t_z" << std::setw(12) << "L_z" << std::setw(12)
        << "gamma" << std::setw(12) << "gamma_max" << std::setw(12) << "rho" << std::setw(12) << "K"
        << std::setw(12) << "alpha_bound" << std::setw(12) << "alpha" << "  binding\n";
    for (const auto& r : rep.rows) {
        log << std::setw(4) << r.z << std::setw(9) << std::setprecision(4) << r.t_z << std::setw(12)
            << std::setprecision(5) << r.oc.L << std::setw(12) << r.block.gamma << std::setw(12)
            << r.gamma_max << std::setw(12) << r.block.rho << std::setw(12) << r.block.K
            << std::setw(12) << r.alpha_bound << std::setw(12) << r.measured_alpha << "  " << r.binding
            << (r.gamma_admissible ? "" : " (configured gamma exceeds gamma_max)") << "\n";
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Nonconvexity demo

NonconvexityResult nonconvexity_demo(std::ostream& out) {
    const double pi = std::numbers::pi;
    BlockPartition part = BlockPartition::uniform(2, 1);
    Box box = Box::cube(2, 0.0, 1.0);
    TimeVaryingQP probe(part, box, nonconvexity_example_family(), 1.0);
    const double xi = min_eigenvalue_over_horizon(probe, 2.0 * pi, 4001);
    TimeVaryingQP qp(part, box, nonconvexity_example_family(), xi);

    SampleState ss{{5.0 * pi / 4.0, 3.0 * pi / 2.0}, 3.0 * pi / 2.0};
    const AggregateObjective agg = build_aggregate(qp, ss);
    NonconvexityResult res;
    res.q_hat = agg.q_hat;
    res.q_sym = agg.q_sym;
    res.eigenvalues = symmetric_part_eigs(agg.q_hat).values;
    res.nonconvex = res.eigenvalues.minCoeff() < 0.0;
    StationaryOptions so;
    so.tol = 1e-10;
    res.stationary = find_stationary_set(agg, box, so);

    auto mat = [&](const char* name, const Matrix& m) {
        out << name << "\n";
        for (Index i = 0; i < m.rows(); ++i) {
            out << "  ";
            for (Index j = 0; j < m.cols(); ++j) {
                out << std::setw(12) << std::fixed << std::setprecision(6) << m(i, j);
            }
            out << "\n";
        }
    };
    out << "Q(t) = [[1.2 + cos t, sin t], [sin t, 1.2]], r = 0, box [0,1]^2\n";
    out << "min_t lambda_min(Q(t)) = " << std::fixed << std::setprecision(6) << xi
        << " (every sampled Q(t) is positive definite)\n";
    out << "samples: theta_1 = 5pi/4, theta_2 = 3pi/2\n";
    mat("aggregate Q_hat:", res.q_hat);
    mat("symmetric part:", res.q_sym);
    out << "eigenvalues of symmetric part: " << std::setprecision(4) << res.eigenvalues(0) << ", "
        << res.eigenvalues(1) << "\n";
    out << "stationary points over the box:";
    for (std::size_t p = 0; p < res.stationary.size(); ++p) {
        out << " (" << std::setprecision(4) << res.stationary.points[p](0) << ", "
            << res.stationary.points[p](1) << ") cost " << res.stationary.costs[p] << ";";
    }
    out << "\nverdict: " << (res.nonconvex ? "nonconvex aggregate" : "convex aggregate") << "\n";
    out.unsetf(std::ios::floatfield);
    return res;
}

// ---------------------------------------------------------------------------
// SVG

namespace {

std::string svg_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_svg_plot(std::ostream& out, const std::string& x_label,
                    const std::vector<PlotSeries>& series) {
    constexpr double W = 800.0;
    constexpr double H = 500.0;
    constexpr double left = 80.0;
    constexpr double right = 20.0;
    constexpr double top = 20.0;
    constexpr double bottom = 60.0;
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -xmin;
    double ymin = xmin;
    double ymax = -xmin;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                continue;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    if (xmax == xmin) {
        xmax = xmin + 1.0;
    }
    if (ymax == ymin) {
        ymax = ymin + 1.0;
    }
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (W - left - right); };
    auto py = [&](double y) { return H - bottom - (y - ymin) / (ymax - ymin) * (H - top - bottom); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" viewBox=\"0 0 800 500\">\n";
    out << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\""
        << H - bottom << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
        << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double xv = xmin + (xmax - xmin) * t / 5.0;
        const double yv = ymin + (ymax - ymin) * t / 5.0;
        out << "<line x1=\"" << svg_number(px(xv)) << "\" y1=\"" << H - bottom << "\" x2=\""
            << svg_number(px(xv)) << "\" y2=\"" << H - bottom + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << svg_number(px(xv)) << "\" y=\"" << H - bottom + 20
            << "\" font-size=\"12\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
        out << "<line x1=\"" << left - 5 << "\" y1=\"" << svg_number(py(yv)) << "\" x2=\"" << left
            << "\" y2=\"" << svg_number(py(yv)) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << left - 8 << "\" y=\"" << svg_number(py(yv) + 4)
            << "\" font-size=\"12\" text-anchor=\"end\">" << tick_label(yv) << "</text>\n";
    }
    out << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 15
        << "\" font-size=\"14\" text-anchor=\"middle\">" << escape_xml(x_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = palette[s % (sizeof palette / sizeof *palette)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
            if (!std::isfinite(series[s].x[i]) || !std::isfinite(series[s].y[i])) {
                continue;
            }
            out << (first ? "" : " ") << svg_number(px(series[s].x[i])) << ','
                << svg_number(py(series[s].y[i]));
            first = false;
        }
        out << "\"/>\n";
        const double ly = top + 10 + 18.0 * static_cast<double>(s);
        out << "<line x1=\"" << W - right - 150 << "\" y1=\"" << ly << "\" x2=\"" << W - right - 125
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << W - right - 120 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
            << escape_xml(series[s].name) << "</text>\n";
    }
    out << "</svg>\n";
}

void plot_csv(const fs::path& csv, const fs::path& svg, const std::vector<std::string>& cols) {
    if (cols.size() < 2) {
        throw ConfigError("plot needs an x column and at least one y column");
    }
    std::ifstream in(csv);
    if (!in) {
        throw ReportError("cannot read " + csv.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ReportError(csv.string() + " is empty");
    }
    std::vector<std::string> header;
    {
        std::string item;
        std::istringstream hs(trim(line));
        while (std::getline(hs, item, ',')) {
            header.push_back(trim(item));
        }
    }
    std::vector<std::size_t> idx;
    for (const auto& c : cols) {
        const auto it = std::find(header.begin(), header.end(), c);
        if (it == header.end()) {
            throw ConfigError("column '" + c + "' not found in " + csv.string());
        }
        idx.push_back(static_cast<std::size_t>(it - header.begin()));
    }
    std::vector<PlotSeries> series(cols.size() - 1);
    for (std::size_t s = 1; s < cols.size(); ++s) {
        series[s - 1].name = cols[s];
    }
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::string item;
        std::istringstream ls(line);
        while (std::getline(ls, item, ',')) {
            f.push_back(item);
        }
        auto value = [&](std::size_t i) {
            return i < f.size() && !trim(f[i]).empty() ? std::strtod(f[i].c_str(), nullptr) : kMissing;
        };
        const double x = value(idx[0]);
        for (std::size_t s = 1; s < idx.size(); ++s) {
            series[s - 1].x.push_back(x);
            series[s - 1].y.push_back(value(idx[s]));
        }
    }
    write_file_atomic(svg, render([&](std::ostream& o) { write_svg_plot(o, cols[0], series); }));
}

}  // namespace tvqp
