#pragma once

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stochlab/config.hpp"
#include "stochlab/csv.hpp"
#include "stochlab/ensemble.hpp"
#include "stochlab/problem.hpp"
#include "stochlab/stability.hpp"
#include "stochlab/svg.hpp"

namespace stochlab {

/// Process exit codes shared by all subcommands.
enum ExitCode : int {
    kExitOk = 0,
    kExitCheckFailed = 1,
    kExitUsage = 2,
    kExitBlowup = 3,
};

namespace detail {

inline CsvTable path_table(const LabProblem& lab, const SamplePath& path) {
    CsvTable t;
    t.header.push_back("t");
    for (const auto& n : lab.state_names) t.header.push_back(n);
    t.header.push_back("V");
    t.header.push_back("LV");
    t.rows.reserve(static_cast<std::size_t>(path.states.rows()));
    for (Eigen::Index j = 0; j < path.states.rows(); ++j) {
        std::vector<double> row;
        row.reserve(t.header.size());
        row.push_back(path.times[j]);
        const Eigen::VectorXd x = path.states.row(j).transpose();
        for (Eigen::Index i = 0; i < x.size(); ++i) row.push_back(x[i]);
        row.push_back(lab.V.value(x));
        row.push_back(lab.LV(x));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline void write_json_file(const std::string& path, const nlohmann::json& doc) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << doc.dump(2) << "\n";
}

inline std::vector<std::string> panels_or_default(const RunConfig& cfg, const LabProblem& lab) {
    return cfg.panels.empty() ? lab.state_names : cfg.panels;
}

}  // namespace detail

/// Simulate one sample path and emit it as CSV (plus an optional SVG with one
/// panel per plotted coordinate). On blow-up the finite prefix is still
/// written and the exit code is 3.
inline int cmd_simulate(const RunConfig& cfg, std::ostream& log = std::cout) {
    const LabProblem lab = make_problem(cfg);
    const Eigen::VectorXd x0 = cfg.x0_or_default();

    SamplePath path;
    int code = kExitOk;
    try {
        path = simulate_path(lab.closed, x0, 0.0, cfg.integrator);
    } catch (const BlowupError& e) {
        log << "simulate: " << e.what() << "\n";
        path = e.partial;
        code = kExitBlowup;
    }

    const CsvTable table = detail::path_table(lab, path);
    if (!cfg.outputs.csv.empty()) {
        write_csv(cfg.outputs.csv, table);
        log << "simulate: wrote " << cfg.outputs.csv << " (" << table.rows.size() << " rows)\n";
    }
    if (!cfg.outputs.svg.empty() && table.rows.size() >= 2) {
        write_svg(cfg.outputs.svg, table, detail::panels_or_default(cfg, lab));
        log << "simulate: wrote " << cfg.outputs.svg << "\n";
    }
    return code;
}

struct VerifyCheck {
    std::string name;
    bool pass = false;
    double worst = 0.0;
    std::string detail;
};

/// Machine-check the invariant-set stability hypotheses for the configured
/// closed loop:
/// the class-K sandwich, the sign of L V (and L W for the jet system), exact
/// drift/diffusion tangency on M, the non-invariance of M_v \ M, empirical
/// boundedness and the conserved integrals. Writes a JSON report; exit code 1
/// if any check fails.
inline int cmd_verify(const RunConfig& cfg, std::ostream& log = std::cout) {
    const LabProblem lab = make_problem(cfg);
    const Eigen::Index n = lab.closed.dim_state;
    const std::uint64_t seed = cfg.integrator.seed;
    std::vector<VerifyCheck> checks;

    {  // condition 1: c1 ||y||^2 <= V <= c2 ||y||^2
        RegionSampler s = make_box_sampler(n, 5.0, 10000, mix_seed(seed, 1));
        const auto violations = sandwich_check(lab.V, lab.closed.y_indices, lab.sandwich, s, 10000);
        checks.push_back({"sandwich", violations.empty(), static_cast<double>(violations.size()),
                          "violations of c1||y||^2 <= V <= c2||y||^2 on 10^4 samples"});
    }
    {  // generator route agrees with the closed form
        RegionSampler s = make_box_sampler(n, 2.0, 10000, mix_seed(seed, 2));
        double worst = 0.0;
        s.for_each([&](std::size_t, const Eigen::VectorXd& x) {
            const double lv = lab.LV(x);
            const double rel = std::abs(apply_generator(lab.closed, lab.V, x) - lv) /
                               (1.0 + std::abs(lv));
            worst = std::max(worst, rel);
        });
        checks.push_back({"generator_oracle", worst <= 1e-8, worst,
                          "max |L_gen V - L_analytic V| / (1 + |LV|) on [-2,2]^n"});
    }
    {  // condition 2: L V <= 0
        RegionSampler s = make_box_sampler(n, 10.0, 100000, mix_seed(seed, 3));
        const auto report = scan_generator_sign(lab.closed, lab.V, s, 1e-10);
        checks.push_back({"lv_sign", report.empty(), report.worst_value,
                          "max L V over 10^5 samples in [-10,10]^n (tol 1e-10)"});
    }
    if (lab.auxW) {  // omega-boundedness certificate for the jet system
        RegionSampler s = make_box_sampler(n, 10.0, 100000, mix_seed(seed, 4));
        const auto report = scan_generator_sign(lab.closed, *lab.auxW, s, 1e-10);
        checks.push_back({"lw_sign", report.empty(), report.worst_value,
                          "max L W over 10^5 samples in [-10,10]^n (tol 1e-10)"});
    }
    {  // invariance hypothesis: exact first-order tangency on M
        RegionSampler s = make_box_sampler(n, 10.0, 1000, mix_seed(seed, 5));
        s.project = zero_coords_projection(lab.closed.y_indices);
        const auto report = tangency_check(lab.closed, s, 0.0);
        checks.push_back({"tangency_on_M", report.empty(), report.worst_value,
                          "worst |y-row of drift/diffusion| on 10^3 points of M (tol 0)"});
    }
    {  // condition 4: M_v \ M carries a nonzero constraint defect
        auto engine = make_engine(mix_seed(seed, 6));
        std::uniform_real_distribution<double> mag(0.2, 1.0);
        std::uniform_real_distribution<double> sign(-1.0, 1.0);
        double min_defect = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 100; ++i) {
            Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
            const Eigen::Index nu1 = n - 3, nu2 = n - 2, nu3 = n - 1;
            x[nu1] = std::copysign(mag(engine), sign(engine));
            x[nu2] = std::copysign(mag(engine), sign(engine));
            x[nu3] = std::copysign(mag(engine), sign(engine));
            min_defect = std::min(min_defect, stationarity_defect(lab.mv_residual, x));
        }
        const double on_m = stationarity_defect(lab.mv_residual, Eigen::VectorXd::Zero(n));
        checks.push_back({"mv_not_invariant", min_defect > 0.0 && on_m == 0.0, min_defect,
                          "min stationarity defect over 100 points of M_v \\ M (must be > 0)"});
    }
    {  // condition 3 surrogate: one path stays under the norm ceiling
        IntegratorConfig ic = cfg.integrator;
        bool blew = false;
        double max_norm = 0.0;
        try {
            const SamplePath path = simulate_path(lab.closed, cfg.x0_or_default(), 0.0, ic);
            for (Eigen::Index j = 0; j < path.states.rows(); ++j)
                max_norm = std::max(max_norm, path.states.row(j).norm());
        } catch (const BlowupError&) {
            blew = true;
        }
        checks.push_back({"boundedness", !blew && max_norm <= cfg.ensemble.norm_ceiling, max_norm,
                          "max ||x|| along one path vs ceiling"});
    }
    {  // conserved integrals; momentum integrals are asserted on the
       // deterministic closed loop, the noise-free rows at the config sigma
        IntegratorConfig ic = cfg.integrator;
        ic.horizon = 20.0;
        ic.dt = 1e-3;
        RunConfig det = cfg;
        det.set_sigma_scalar(0.0);
        const LabProblem det_lab = make_problem(det);
        const SamplePath noisy = simulate_path(lab.closed, cfg.x0_or_default(), 0.0, ic);
        const SamplePath quiet = simulate_path(det_lab.closed, cfg.x0_or_default(), 0.0, ic);
        for (const auto& [name, fn] : lab.conserved) {
            const bool momentum = (name == "W1" || name == "W2");
            const SamplePath& path = momentum ? quiet : noisy;
            const double q0 = fn(path.states.row(0).transpose());
            const auto drift = conserved_drift(path, fn);
            const double rel = drift.max_abs_dev / std::max(1.0, std::abs(q0));
            const double bound = momentum ? 1e-3 : 5e-3;
            checks.push_back({"conserved_" + name, rel <= bound, rel,
                              momentum ? "relative drift over horizon 20, sigma = 0"
                                       : "relative drift over horizon 20, config sigma"});
        }
    }
    if (lab.kind == ModelKind::Rotor) {  // kernel of the momentum Hessian
        const Eigen::MatrixXd basis = rotor_N_nullspace(cfg.rotor);
        Eigen::MatrixXd expected(5, 2);
        expected.col(0) << -cfg.rotor.I1 / cfg.rotor.A1, 0, 0, 1, 0;
        expected.col(1) << 0, -cfg.rotor.I2 / cfg.rotor.A2, 0, 0, 1;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(expected);
        const Eigen::MatrixXd qexp = qr.householderQ() * Eigen::MatrixXd::Identity(5, 2);
        double dist = 1.0;
        if (basis.cols() == 2)
            dist = (basis * basis.transpose() - qexp * qexp.transpose()).norm();
        checks.push_back({"null_space", basis.cols() == 2 && dist <= 1e-10, dist,
                          "dim N == 2 and subspace distance to the analytic basis"});
    }

    bool all_pass = true;
    nlohmann::json jchecks = nlohmann::json::array();
    for (const auto& c : checks) {
        all_pass = all_pass && c.pass;
        jchecks.push_back({{"name", c.name}, {"pass", c.pass}, {"worst", c.worst}, {"detail", c.detail}});
        log << "verify: " << (c.pass ? "PASS " : "FAIL ") << c.name << " (worst " << c.worst << ")\n";
    }
    nlohmann::json report = {
        {"model", cfg.model == ModelKind::Jet ? "jet" : "rotor"},
        {"all_pass", all_pass},
        {"checks", jchecks},
    };
    if (!cfg.outputs.json.empty()) {
        detail::write_json_file(cfg.outputs.json, report);
        log << "verify: wrote " << cfg.outputs.json << "\n";
    }
    return all_pass ? kExitOk : kExitCheckFailed;
}

/// Monte Carlo ensemble run with the stability-in-probability estimators.
/// Emits per-checkpoint statistics as CSV and the scalar estimates (with
/// Wilson 95% intervals) as JSON.
inline int cmd_ensemble(const RunConfig& cfg, std::ostream& log = std::cout) {
    const LabProblem lab = make_problem(cfg);
    const Eigen::VectorXd x0 = cfg.x0_or_default();

    EnsembleOptions options;
    options.n_checkpoints = cfg.ensemble.checkpoints;
    options.tail_fraction = cfg.ensemble.tail_fraction;
    options.norm_ceiling = cfg.ensemble.norm_ceiling;
    options.threads = cfg.ensemble.threads;

    EnsembleSummary summary;
    try {
        summary = run_ensemble(
            lab.closed, [&](std::uint64_t) { return x0; }, cfg.ensemble.n_paths, cfg.integrator,
            lab.V, options);
    } catch (const AllPathsBlewUpError& e) {
        log << "ensemble: " << e.what() << "\n";
        return kExitBlowup;
    }

    if (!cfg.outputs.csv.empty()) {
        CsvTable t;
        t.header = {"t", "mean_y_norm", "q05_y_norm", "q95_y_norm", "mean_V", "se_V"};
        for (Eigen::Index c = 0; c < summary.times.size(); ++c)
            t.rows.push_back({summary.times[c], summary.mean_y_norm[c], summary.q05_y_norm[c],
                              summary.q95_y_norm[c], summary.mean_V[c], summary.se_V[c]});
        write_csv(cfg.outputs.csv, t);
        log << "ensemble: wrote " << cfg.outputs.csv << "\n";
        if (!cfg.outputs.svg.empty()) {
            write_svg(cfg.outputs.svg, t, {"mean_y_norm", "q05_y_norm", "q95_y_norm", "mean_V"});
            log << "ensemble: wrote " << cfg.outputs.svg << "\n";
        }
    }

    const EstimateResult exceed = estimate_exceedance(summary, cfg.ensemble.epsilon1);
    const EstimateResult conv = estimate_convergence(summary, cfg.ensemble.threshold);
    // z = 3 slack, with a small floor for integrator error on V.
    const double v_scale = summary.v0.cwiseAbs().maxCoeff();
    const ViolationReport super =
        supermartingale_check(summary, 1.3498980316300946e-3, 1e-12 * std::max(1.0, v_scale));

    nlohmann::json report = {
        {"model", cfg.model == ModelKind::Jet ? "jet" : "rotor"},
        {"n_paths", summary.n_paths},
        {"seed", summary.seed},
        {"blowup_count", summary.blowup_count},
        {"ceiling_hit", summary.ceiling_hit},
        {"norm_ceiling", summary.norm_ceiling},
        {"exceedance",
         {{"epsilon1", cfg.ensemble.epsilon1},
          {"p_hat", exceed.p_hat},
          {"count", exceed.count},
          {"ci95", {exceed.ci95.lo, exceed.ci95.hi}}}},
        {"convergence",
         {{"threshold", cfg.ensemble.threshold},
          {"tail_fraction", cfg.ensemble.tail_fraction},
          {"surrogate", "tail-window mean of ||y|| below threshold"},
          {"p_hat", conv.p_hat},
          {"count", conv.count},
          {"ci95", {conv.ci95.lo, conv.ci95.hi}}}},
        {"supermartingale",
         {{"violations", super.count}, {"worst_excess", super.worst_value}}},
    };

    log << "ensemble: exceedance p_hat = " << exceed.p_hat << " [" << exceed.ci95.lo << ", "
        << exceed.ci95.hi << "]\n";
    log << "ensemble: convergence p_hat = " << conv.p_hat << " [" << conv.ci95.lo << ", "
        << conv.ci95.hi << "]\n";
    log << "ensemble: supermartingale violations = " << super.count << "\n";
    if (!cfg.outputs.json.empty()) {
        detail::write_json_file(cfg.outputs.json, report);
        log << "ensemble: wrote " << cfg.outputs.json << "\n";
    }
    return kExitOk;
}

/// Re-plot a CSV produced by this tool. Pure function of the input bytes.
inline int cmd_plot(const std::string& csv_path, const std::string& svg_path,
                    std::vector<std::string> panels, std::ostream& log = std::cout) {
    CsvTable table;
    try {
        table = read_csv(csv_path);
    } catch (const CsvParseError& e) {
        log << "plot: " << e.what() << "\n";
        return kExitUsage;
    }
    if (panels.empty()) {
        for (const auto& h : table.header)
            if (h != "t") panels.push_back(h);
    }
    write_svg(svg_path, table, panels);
    log << "plot: wrote " << svg_path << " (" << panels.size() << " panels)\n";
    return kExitOk;
}

}  // namespace stochlab
