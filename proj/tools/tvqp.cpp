// Command-line front end for running and reporting tvqp experiments.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tvqp/report.hpp"

namespace fs = std::filesystem;

namespace {

void print_summary(const char* label, const tvqp::SummaryReport& s) {
    std::cout << label << ": rms_error " << tvqp::format_number(s.rms_error) << ", avg_before_sample "
              << tvqp::format_number(s.avg_before_sample) << ", final_alpha "
              << tvqp::format_number(s.final_alpha) << "\n";
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    for (const char c : text) {
        if (c == ',') {
            if (!item.empty()) {
                out.push_back(item);
            }
            item.clear();
        } else if (c != ' ') {
            item += c;
        }
    }
    if (!item.empty()) {
        out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asynchronous block coordinate descent on time-varying box QPs"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir = "out";
    std::string param;
    std::string values;
    std::string csv;
    std::string svg;
    std::string cols = "k,alpha";

    auto* run_cmd = app.add_subcommand("run", "Run the async solver and write trace.csv and a summary");
    auto* compare_cmd = app.add_subcommand("compare", "Run async BCD, sync BCD and consensus on one sample realization");
    auto* sweep_cmd = app.add_subcommand("sweep", "Repeat a run for several values of one parameter");
    auto* bounds_cmd = app.add_subcommand("bounds", "Print and write the per-interval convergence constants");
    auto* nonconvex_cmd = app.add_subcommand("nonconvexity", "Show that an aggregate of convex samples can be nonconvex");
    auto* plot_cmd = app.add_subcommand("plot", "Render CSV columns as an SVG line chart");

    for (auto* cmd : {run_cmd, compare_cmd, sweep_cmd, bounds_cmd}) {
        cmd->add_option("config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    }
    sweep_cmd->add_option("--param", param, "B, gamma, kappa, p_sample, p_update, p_comm or N")->required();
    sweep_cmd->add_option("--values", values, "Comma-separated values")->required();
    plot_cmd->add_option("csv", csv, "Input CSV")->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("-o,--output", svg, "Output SVG")->required();
    plot_cmd->add_option("--cols", cols, "x column then y columns, comma-separated")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        const auto t0 = std::chrono::steady_clock::now();
        if (*nonconvex_cmd) {
            const auto res = tvqp::nonconvexity_demo(std::cout);
            return res.nonconvex ? 0 : 1;
        }
        if (*plot_cmd) {
            tvqp::plot_csv(csv, svg, split_list(cols));
            std::cout << "wrote " << svg << "\n";
            return 0;
        }
        const tvqp::ExperimentConfig cfg = tvqp::load_experiment_config(config);
        if (*run_cmd) {
            const auto r = tvqp::run_experiment(cfg, out_dir);
            print_summary(cfg.name.c_str(), r.summary);
        } else if (*compare_cmd) {
            const auto r = tvqp::compare(cfg, out_dir);
            print_summary("async_bcd", r.async_bcd.summary);
            print_summary("sync_bcd", r.sync_bcd.summary);
            print_summary("consensus", r.consensus.summary);
            std::cout << "consensus max disagreement " << tvqp::format_number(r.consensus_disagreement) << "\n";
        } else if (*sweep_cmd) {
            const auto rows = tvqp::sweep(cfg, param, split_list(values), out_dir);
            for (const auto& row : rows) {
                print_summary((param + "=" + row.value).c_str(), row.summary);
            }
        } else if (*bounds_cmd) {
            tvqp::bounds_report(cfg, out_dir, std::cout);
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << "outputs in " << fs::path(out_dir).string() << " (" << secs << " s)\n";
    } catch (const tvqp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const tvqp::ReportError& e) {
        std::cerr << "report error: " << e.what() << "\n";
        return 3;
    } catch (const tvqp::OracleError& e) {
        std::cerr << "oracle error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
