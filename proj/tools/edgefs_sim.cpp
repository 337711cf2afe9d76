// Scenario runner CLI. Executes a scenario over the simulated network,
// prints the consistency report, and exits 0 iff every check passed.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "edgefs/scenario.hpp"

namespace {

bool parse_delay_range(const std::string& spec, edgefs::Tick& min, edgefs::Tick& max) {
    auto sep = spec.find("..");
    if (sep == std::string::npos) return false;
    try {
        min = std::stoull(spec.substr(0, sep));
        max = std::stoull(spec.substr(sep + 2));
    } catch (const std::exception&) {
        return false;
    }
    return min >= 1 && max >= min;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"edgefs-sim: metadata protocol simulator for edge-device file systems"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "run a scenario file");
    std::string scenario_path;
    std::uint64_t seed = 1;
    double loss = 0.0;
    std::string delay_spec = "1..3";
    std::string trace_path;
    std::string report_path;
    std::uint64_t ping_period = 5;
    bool audit = false;

    run_cmd->add_option("file", scenario_path, "scenario file")->required();
    run_cmd->add_option("--seed", seed, "deterministic RNG seed");
    run_cmd->add_option("--loss", loss, "datagram loss probability [0,1)")
        ->check(CLI::Range(0.0, 0.999));
    run_cmd->add_option("--delay", delay_spec, "delivery delay range MIN..MAX in ticks");
    run_cmd->add_option("--trace", trace_path, "write the event trace to this file");
    run_cmd->add_option("--report", report_path, "write the consistency report to this file");
    run_cmd->add_option("--ping-period", ping_period, "ping period in ticks");
    run_cmd->add_flag("--audit", audit, "run invariant audits after every event");

    CLI11_PARSE(app, argc, argv);

    edgefs::scenario::RunOptions options;
    options.net.seed = seed;
    options.net.loss_probability = loss;
    if (!parse_delay_range(delay_spec, options.net.delay_min, options.net.delay_max)) {
        std::cerr << "invalid --delay range: " << delay_spec << "\n";
        return 2;
    }
    options.reach.ping_period = ping_period;
    options.audit = audit;

    edgefs::scenario::Scenario scenario;
    try {
        scenario = edgefs::scenario::parse_file(scenario_path);
    } catch (const edgefs::scenario::ParseError& e) {
        std::cerr << scenario_path << ":" << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    edgefs::scenario::RunResult result = edgefs::scenario::run(scenario, options);

    if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        if (!out) {
            std::cerr << "cannot write trace file: " << trace_path << "\n";
            return 2;
        }
        out << result.trace;
    }

    const std::string report = result.report.to_text();
    std::cout << report;
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) {
            std::cerr << "cannot write report file: " << report_path << "\n";
            return 2;
        }
        out << report;
    }

    return result.report.all_pass() ? 0 : 1;
}
