// stochlab: simulate and verify the two stochastically perturbed rigid-body
// stabilization systems (jet torques, rotor torques), estimate their
// stability-in-probability statistics, and plot the results.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stochlab/commands.hpp"

namespace {

using namespace stochlab;

struct FlagValues {
    std::string config_path;
    std::string model;
    double dt = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::string scheme;
    std::size_t n_paths = 0;
    double sigma = 0.0;
    double eps = 0.0;
    std::string momentum_fix;
    std::string h_mode;
    std::string out_csv, out_svg, out_json;
    std::string x0_csv;
    unsigned threads = 0;
    double epsilon1 = 0.0;
    double threshold = 0.0;
    double tail_fraction = 0.0;
    std::size_t checkpoints = 0;
    std::string panels;
};

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

Eigen::VectorXd parse_x0(const std::string& s) {
    const auto parts = split_commas(s);
    Eigen::VectorXd x(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
        try {
            x[static_cast<Eigen::Index>(i)] = std::stod(parts[i]);
        } catch (const std::exception&) {
            throw ConfigError("bad --x0 entry '" + parts[i] + "'");
        }
    }
    return x;
}

void add_common_flags(CLI::App* cmd, FlagValues& v) {
    cmd->add_option("--config", v.config_path, "JSON configuration document");
    cmd->add_option("--model", v.model, "Model: jet or rotor");
    cmd->add_option("--dt", v.dt, "Integration step size");
    cmd->add_option("--horizon", v.horizon, "Integration horizon");
    cmd->add_option("--seed", v.seed, "RNG seed (fallback: STOCHLAB_SEED)");
    cmd->add_option("--scheme", v.scheme, "Scheme: euler-maruyama or milstein");
    cmd->add_option("--sigma", v.sigma, "Scalar noise intensity");
    cmd->add_option("--eps", v.eps, "Feedback gain floor epsilon");
    cmd->add_option("--momentum-fix", v.momentum_fix, "Rotor momentum fix: corrected or as-printed");
    cmd->add_option("--h-mode", v.h_mode, "Rotor gain mode: constant-eps or jet-style");
    cmd->add_option("--x0", v.x0_csv, "Initial state as comma-separated values");
    cmd->add_option("--n-paths", v.n_paths, "Ensemble path count");
    cmd->add_option("--threads", v.threads, "Worker threads (0 = auto)");
    cmd->add_option("--epsilon1", v.epsilon1, "Exceedance level epsilon_1");
    cmd->add_option("--threshold", v.threshold, "Convergence surrogate threshold");
    cmd->add_option("--tail-fraction", v.tail_fraction, "Trailing window fraction");
    cmd->add_option("--checkpoints", v.checkpoints, "Ensemble checkpoint count");
    cmd->add_option("--out-csv", v.out_csv, "CSV output path");
    cmd->add_option("--out-svg", v.out_svg, "SVG output path");
    cmd->add_option("--out-json", v.out_json, "JSON output path");
    cmd->add_option("--panels", v.panels, "Comma-separated columns to plot");
}

RunConfig build_config(const CLI::App* cmd, const FlagValues& v) {
    RunConfig cfg;
    if (!v.config_path.empty()) cfg = load_config_file(v.config_path);

    const auto passed = [&](const std::string& flag) { return cmd->count(flag) > 0; };
    if (passed("--model")) cfg.model = parse_model_kind(v.model);
    if (passed("--dt")) cfg.integrator.dt = v.dt;
    if (passed("--horizon")) cfg.integrator.horizon = v.horizon;
    if (passed("--scheme")) cfg.integrator.scheme = parse_scheme(v.scheme);
    cfg.integrator.seed = resolve_seed(
        passed("--seed") ? std::optional<std::uint64_t>(v.seed) : std::nullopt,
        cfg.seed_from_config, cfg.integrator.seed, std::getenv("STOCHLAB_SEED"));
    if (passed("--sigma")) cfg.set_sigma_scalar(v.sigma);
    if (passed("--eps")) cfg.set_eps(v.eps);
    if (passed("--momentum-fix")) cfg.rotor.momentum_fix = parse_momentum_fix(v.momentum_fix);
    if (passed("--h-mode")) cfg.rotor.h_mode = parse_h_mode(v.h_mode);
    if (passed("--x0")) cfg.x0 = parse_x0(v.x0_csv);
    if (passed("--n-paths")) cfg.ensemble.n_paths = v.n_paths;
    if (passed("--threads")) cfg.ensemble.threads = v.threads;
    if (passed("--epsilon1")) cfg.ensemble.epsilon1 = v.epsilon1;
    if (passed("--threshold")) cfg.ensemble.threshold = v.threshold;
    if (passed("--tail-fraction")) cfg.ensemble.tail_fraction = v.tail_fraction;
    if (passed("--checkpoints")) cfg.ensemble.checkpoints = v.checkpoints;
    if (passed("--out-csv")) cfg.outputs.csv = v.out_csv;
    if (passed("--out-svg")) cfg.outputs.svg = v.out_svg;
    if (passed("--out-json")) cfg.outputs.json = v.out_json;
    if (passed("--panels")) cfg.panels = split_commas(v.panels);

    cfg.integrator.validate();
    if (cfg.model == ModelKind::Jet)
        cfg.jet.validate();
    else
        cfg.rotor.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochlab: stochastic partial-stabilization laboratory"};
    app.require_subcommand(1);

    FlagValues sim_v, ver_v, ens_v;
    CLI::App* sim = app.add_subcommand("simulate", "Integrate one sample path to CSV/SVG");
    add_common_flags(sim, sim_v);
    CLI::App* ver = app.add_subcommand("verify", "Machine-check the stability hypotheses");
    add_common_flags(ver, ver_v);
    CLI::App* ens = app.add_subcommand("ensemble", "Monte Carlo stability estimators");
    add_common_flags(ens, ens_v);

    std::string plot_in, plot_out, plot_panels;
    CLI::App* plot = app.add_subcommand("plot", "Render an SVG from a CSV produced by this tool");
    plot->add_option("--in-csv", plot_in, "Input CSV path")->required();
    plot->add_option("--out-svg", plot_out, "Output SVG path")->required();
    plot->add_option("--panels", plot_panels, "Comma-separated columns to plot");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : stochlab::kExitUsage;
    }

    try {
        if (sim->parsed()) return cmd_simulate(build_config(sim, sim_v));
        if (ver->parsed()) return cmd_verify(build_config(ver, ver_v));
        if (ens->parsed()) return cmd_ensemble(build_config(ens, ens_v));
        if (plot->parsed())
            return cmd_plot(plot_in, plot_out,
                            plot_panels.empty() ? std::vector<std::string>{}
                                                : split_commas(plot_panels));
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return stochlab::kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return stochlab::kExitUsage;
    } catch (const stochlab::BlowupError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return stochlab::kExitBlowup;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return stochlab::kExitUsage;
    }
    return stochlab::kExitUsage;
}
