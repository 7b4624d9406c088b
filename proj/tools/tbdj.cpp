#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tbdj/cli.hpp"

namespace {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// <out>.manifest.json next to the primary output.
void write_manifest(const std::string& out_path, const std::string& config_path, const std::string& command,
                    std::uint64_t seed, std::uint64_t runs, const std::vector<std::string>& outputs) {
    if (out_path.empty()) return;
    nlohmann::json m;
    m["command"] = command;
    m["config"] = config_path;
    m["seed"] = seed;
    m["runs"] = runs;
    m["outputs"] = outputs;
    m["timestamp"] = utc_timestamp();
    std::ofstream f(out_path + ".manifest.json");
    f << m.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    using namespace tbdj::cli;
    CLI::App app{"Time-bin Deutsch-Jozsa / Bernstein-Vazirani simulator"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("-c,--config", config_path, "experiment config (key = value); default n=3");

    auto* validate = app.add_subcommand("validate", "check delays and report output-bin timing");

    RunRequest run_req;
    std::string mode = "dj";
    auto* run = app.add_subcommand("run", "propagate one oracle and report the outcome distribution");
    run->add_option("--oracle", run_req.oracle_path, "truth-table file");
    run->add_option("--bv", run_req.bv, "use f_j with this j, e.g. 101");
    run->add_flag("--complement", run_req.complement, "use the complement of the oracle");
    run->add_option("--mode", mode, "dj or bv")->check(CLI::IsMember({"dj", "bv"}));

    auto* tp = app.add_subcommand("throughput", "loss budget of the output bins");

    VisibilityRequest vis_req;
    std::string preset;
    auto* vis = app.add_subcommand("visibility", "Monte Carlo visibility table over the BV family");
    vis->add_option("--runs", vis_req.runs, "runs per oracle")->check(CLI::PositiveNumber);
    vis->add_option("--seed", vis_req.seed, "master seed");
    vis->add_option("--threads", vis_req.threads, "worker threads (0 = all cores)");
    vis->add_option("--out", vis_req.out_path, "visibility CSV (z,V,stderr)");
    vis->add_option("--counts", vis_req.counts_path, "counts CSV (z,bin_time_units,oracle,counts,runs)");
    vis->add_option("--preset", preset, "imperfection preset")->check(CLI::IsMember({"paper-like", "ideal"}));

    std::string knob;
    std::vector<double> values;
    std::uint64_t sweep_runs = 100000, sweep_seed = 1;
    unsigned sweep_threads = 0;
    std::string sweep_out;
    auto* sw = app.add_subcommand("sweep", "expected and sampled mean visibility versus one knob");
    sw->add_option("knob", knob, "eps, sigma_phi, v, dark_rate, mu")->required();
    sw->add_option("--values", values, "comma-separated knob values")->delimiter(',')->required();
    sw->add_option("--runs", sweep_runs, "runs per oracle")->check(CLI::PositiveNumber);
    sw->add_option("--seed", sweep_seed, "master seed");
    sw->add_option("--threads", sweep_threads, "worker threads (0 = all cores)");
    sw->add_option("--out", sweep_out, "CSV output file");
    sw->add_option("--preset", preset, "imperfection preset")->check(CLI::IsMember({"paper-like", "ideal"}));

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = load_config(config_path);
        if (!preset.empty()) cfg.experiment.imperfections = *tbdj::imperfection_preset(preset);
        if (*validate) return cmd_validate(cfg, std::cout);
        if (*run) {
            run_req.mode = mode == "bv" ? Mode::bv : Mode::dj;
            return cmd_run(cfg, run_req, std::cout);
        }
        if (*tp) return cmd_throughput(cfg, std::cout);
        if (*vis) {
            const int rc = cmd_visibility(cfg, vis_req, std::cout);
            std::vector<std::string> outputs{vis_req.out_path};
            if (!vis_req.counts_path.empty()) outputs.push_back(vis_req.counts_path);
            write_manifest(vis_req.out_path, config_path, "visibility", vis_req.seed, vis_req.runs, outputs);
            return rc;
        }
        if (*sw) {
            if (sweep_out.empty()) return cmd_sweep(cfg, knob, values, sweep_runs, sweep_seed, sweep_threads, std::cout);
            std::ofstream f(sweep_out, std::ios::binary);
            if (!f) throw CliError("io", 5, "cannot write '" + sweep_out + "'");
            const int rc = cmd_sweep(cfg, knob, values, sweep_runs, sweep_seed, sweep_threads, f);
            write_manifest(sweep_out, config_path, "sweep " + knob, sweep_seed, sweep_runs, {sweep_out});
            return rc;
        }
    } catch (const CliError& e) {
        std::cerr << "error[" << e.category() << "]: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return 70;
    }
    return 1;
}
