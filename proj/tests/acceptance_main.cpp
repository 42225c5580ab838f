// Acceptance suite: runs every stability-lab acceptance criterion at its
// pinned tolerance and prints one PASS/FAIL line per criterion. Exits
// nonzero if any criterion fails. argv[1] may name the CLI binary (used by
// the determinism criterion); it defaults to ./stochlab.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "stochlab/ensemble.hpp"
#include "stochlab/generator.hpp"
#include "stochlab/jet.hpp"
#include "stochlab/rotor.hpp"
#include "stochlab/stability.hpp"

using namespace stochlab;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("criterion %02d %s  %-28s %s\n", id, pass ? "PASS" : "FAIL", name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// --- criteria 1-2: generator closed forms ---------------------------------

template <class Params, class ModelFn, class FieldFn, class AnalyticFn>
void generator_oracle(int id, const std::string& name, Eigen::Index dim, ModelFn make_model,
                      FieldFn make_field, AnalyticFn analytic, std::vector<double> sigmas) {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (double s : sigmas) {
        Params p;
        p.sigma = Eigen::RowVectorXd::Constant(1, s);
        const SdeModel model = make_model(p);
        const ScalarField field = make_field(p);
        RegionSampler box = make_box_sampler(dim, 2.0, 10000, 1001 + static_cast<int>(10 * s));
        box.for_each([&](std::size_t, const Eigen::VectorXd& x) {
            const double ana = analytic(p, x);
            const double rel = std::abs(apply_generator(model, field, x) - ana) /
                               (1.0 + std::abs(ana));
            worst = std::max(worst, rel);
        });
    }
    const double secs = elapsed_s(start);
    report(id, name, worst <= 1e-8 && secs < 5.0,
           "max rel diff " + fmt(worst) + " (tol 1e-8) on 10^4 states per sigma, " + fmt(secs) + " s");
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "./stochlab";
    const auto tmp = std::filesystem::temp_directory_path() / "stochlab_acceptance";
    std::filesystem::create_directories(tmp);

    // 1. Generator oracle, jet closed loop, any sigma.
    generator_oracle<JetParams>(
        1, "generator-oracle-jet", jet_dim, [](const JetParams& p) { return jet_closed_model(p); },
        [](const JetParams& p) { return jet_lyapunov(p); },
        [](const JetParams& p, const Eigen::VectorXd& x) { return jet_LV_analytic(p, x); },
        {0.0, 0.2, 0.7});

    // 2. Generator oracle, rotor closed loop (Corrected mode).
    generator_oracle<RotorParams>(
        2, "generator-oracle-rotor", rotor_dim,
        [](const RotorParams& p) { return rotor_closed_model(p); },
        [](const RotorParams& p) { return rotor_lyapunov(p); },
        [](const RotorParams& p, const Eigen::VectorXd& x) { return rotor_LV_analytic(p, x); },
        {0.0, 0.2, 0.7});

    // 3. Sign scans: LV <= 0 for both closed loops, LW <= 0 for the jet W.
    {
        const JetParams jp;
        RegionSampler jbox = make_box_sampler(jet_dim, 10.0, 100000, 2001);
        const auto rv = scan_generator_sign(jet_closed_model(jp), jet_lyapunov(jp), jbox, 1e-10);
        RegionSampler wbox = make_box_sampler(jet_dim, 10.0, 100000, 2002);
        const auto rw = scan_generator_sign(jet_closed_model(jp), jet_aux_W(jp), wbox, 1e-10);
        const RotorParams rp;
        RegionSampler rbox = make_box_sampler(rotor_dim, 10.0, 100000, 2003);
        const auto rr = scan_generator_sign(rotor_closed_model(rp), rotor_lyapunov(rp), rbox, 1e-10);
        report(3, "sign-scans", rv.empty() && rw.empty() && rr.empty(),
               "violations jet V/W, rotor V = " + std::to_string(rv.count) + "/" +
                   std::to_string(rw.count) + "/" + std::to_string(rr.count) + ", worst " +
                   fmt(std::max({rv.worst_value, rw.worst_value, rr.worst_value})));
    }

    // 4. Tangency/invariance: exact zeros on M and an on-M path that stays.
    {
        const JetParams jp;
        RegionSampler jbox = make_box_sampler(jet_dim, 10.0, 1000, 2101);
        jbox.project = zero_coords_projection(jet_y_indices());
        const auto jrep = tangency_check(jet_closed_model(jp), jbox, 0.0);

        const RotorParams rp;
        RegionSampler rbox = make_box_sampler(rotor_dim, 10.0, 1000, 2102);
        rbox.project = zero_coords_projection(rotor_y_indices());
        const auto rrep = tangency_check(rotor_closed_model(rp), rbox, 0.0);

        JetParams jdet = jp;
        jdet.sigma = Eigen::RowVectorXd::Zero(1);
        Eigen::VectorXd jx0 = Eigen::VectorXd::Zero(jet_dim);
        jx0[2] = 0.7;
        jx0[5] = 0.9;
        const SamplePath jpath =
            simulate_path(jet_closed_model(jdet), jx0, 0.0, {1e-3, 20.0, SdeScheme::EulerMaruyama, 5});
        double jmax = 0.0;
        for (Eigen::Index j = 0; j < jpath.states.rows(); ++j)
            for (Eigen::Index yi : jet_y_indices())
                jmax = std::max(jmax, std::abs(jpath.states(j, yi)));

        RotorParams rdet = rp;
        rdet.sigma = Eigen::RowVectorXd::Zero(1);
        Eigen::VectorXd rx0 = Eigen::VectorXd::Zero(rotor_dim);
        rx0[2] = 0.5;
        rx0[3] = 1.0;
        rx0[4] = -0.5;
        rx0[7] = 1.0;
        const SamplePath rpath = simulate_path(rotor_closed_model(rdet), rx0, 0.0,
                                               {1e-3, 20.0, SdeScheme::EulerMaruyama, 6});
        double rmax = 0.0;
        for (Eigen::Index j = 0; j < rpath.states.rows(); ++j)
            for (Eigen::Index yi : rotor_y_indices())
                rmax = std::max(rmax, std::abs(rpath.states(j, yi)));

        report(4, "tangency-invariance",
               jrep.worst_value == 0.0 && rrep.worst_value == 0.0 && jrep.empty() && rrep.empty() &&
                   jmax <= 1e-10 && rmax <= 1e-10,
               "worst M residual jet/rotor = " + fmt(jrep.worst_value) + "/" + fmt(rrep.worst_value) +
                   ", on-M path max|y| = " + fmt(std::max(jmax, rmax)));
    }

    // 5. Conservation: jet geometric integral (first order in dt) and the
    //    rotor momentum integrals; AsPrinted is the negative control.
    {
        const JetParams jp;  // sigma = 0.2 default
        const SdeModel jm = jet_closed_model(jp);
        const SamplePath coarse =
            simulate_path(jm, jet_default_x0(), 0.0, {1e-3, 20.0, SdeScheme::EulerMaruyama, 7});
        const SamplePath fine =
            simulate_path(jm, jet_default_x0(), 0.0, {5e-4, 20.0, SdeScheme::EulerMaruyama, 7});
        const double dev_c = conserved_drift(coarse, jet_geometric_integral).max_abs_dev;
        const double dev_f = conserved_drift(fine, jet_geometric_integral).max_abs_dev;
        const double factor = dev_c / dev_f;

        RotorParams rdet;
        rdet.sigma = Eigen::RowVectorXd::Zero(1);
        const SamplePath rot = simulate_path(rotor_closed_model(rdet), rotor_default_x0(), 0.0,
                                             {1e-3, 20.0, SdeScheme::EulerMaruyama, 8});
        double worst_rel = 0.0;
        for (int i = 0; i < 3; ++i) {
            const auto q = [&, i](const Eigen::VectorXd& x) { return rotor_integrals(rdet, x)[i]; };
            const double q0 = q(rotor_default_x0());
            worst_rel = std::max(worst_rel,
                                 conserved_drift(rot, q).max_abs_dev / std::max(1.0, std::abs(q0)));
        }

        RotorParams printed = rdet;
        printed.momentum_fix = MomentumFix::AsPrinted;
        const SamplePath bad = simulate_path(rotor_closed_model(printed), rotor_default_x0(), 0.0,
                                             {1e-3, 20.0, SdeScheme::EulerMaruyama, 8});
        const auto w1 = [&](const Eigen::VectorXd& x) { return rotor_integrals(printed, x)[0]; };
        const double w1_0 = w1(rotor_default_x0());
        const double printed_rel =
            conserved_drift(bad, w1).max_abs_dev / std::max(1.0, std::abs(w1_0));

        report(5, "conservation",
               dev_c <= 5e-3 && factor >= 1.5 && factor <= 3.0 && worst_rel <= 1e-3 &&
                   printed_rel > 1e-3,
               "jet nu-drift " + fmt(dev_c) + " (halving factor " + fmt(factor) +
                   "), rotor W1-3 rel " + fmt(worst_rel) + ", as-printed W1 rel " + fmt(printed_rel));
    }

    // 6. Strong order on the GBM oracle.
    {
        const auto start = std::chrono::steady_clock::now();
        StrongOrderProblem gbm;
        gbm.model = make_geometric_brownian(0.05, 0.2);
        gbm.x0 = Eigen::VectorXd::Constant(1, 1.0);
        gbm.horizon = 1.0;
        gbm.exact_terminal = [](double horizon, const Eigen::VectorXd& x0, const Eigen::MatrixXd& dW,
                                double) {
            return Eigen::VectorXd::Constant(
                       1, gbm_exact_terminal(0.05, 0.2, x0[0], horizon, dW.col(0).sum()))
                .eval();
        };
        const std::vector<double> dts = {std::pow(2.0, -6), std::pow(2.0, -7), std::pow(2.0, -8),
                                         std::pow(2.0, -9), std::pow(2.0, -10)};
        const double em = estimate_strong_order(gbm, SdeScheme::EulerMaruyama, dts, 200, 9);
        const double mil = estimate_strong_order(gbm, SdeScheme::Milstein, dts, 200, 9);
        const double secs = elapsed_s(start);
        report(6, "strong-order",
               em >= 0.4 && em <= 0.6 && mil >= 0.85 && mil <= 1.15 && secs < 30.0,
               "EM slope " + fmt(em) + " in [0.4,0.6], Milstein slope " + fmt(mil) +
                   " in [0.85,1.15], " + fmt(secs) + " s");
    }

    // 7-9 share the jet ensemble (figs 1-2 reproduction).
    EnsembleSummary jet_summary;
    {
        const JetParams jp;
        EnsembleOptions opt;
        const IntegratorConfig cfg{1e-3, 50.0, SdeScheme::EulerMaruyama, 20260810};
        jet_summary = run_ensemble(
            jet_closed_model(jp), [](std::uint64_t) { return jet_default_x0(); }, 200, cfg,
            jet_lyapunov(jp), opt);

        const EstimateResult conv = estimate_convergence(jet_summary, 0.05);
        bool tails_ok = true;
        double worst_tail_std = 0.0;
        for (std::size_t i = 0; i < jet_summary.n_paths; ++i) {
            if (jet_summary.blown[i] || !(jet_summary.tail_mean_y[i] < 0.05)) continue;
            const double w3_std = jet_summary.tail_coord_std(i, 2);
            const double n3_std = jet_summary.tail_coord_std(i, 5);
            worst_tail_std = std::max({worst_tail_std, w3_std, n3_std});
            if (w3_std > 1e-2 || n3_std > 1e-2) tails_ok = false;
        }
        report(7, "figs-1-2-jet-ensemble",
               conv.p_hat >= 0.95 && tails_ok && jet_summary.blowup_count == 0,
               "convergence p_hat " + fmt(conv.p_hat) + " (>= 0.95 at threshold 0.05), worst tail " +
                   "std of omega3/nu3 " + fmt(worst_tail_std) + ", blowups " +
                   std::to_string(jet_summary.blowup_count));
    }

    // 8. Rotor ensemble (figs 3-5 reproduction): stabilized block converges,
    //    rotor speeds stay bounded.
    {
        const RotorParams rp;
        EnsembleOptions opt;
        const IntegratorConfig cfg{1e-3, 50.0, SdeScheme::EulerMaruyama, 20260811};
        const EnsembleSummary s = run_ensemble(
            rotor_closed_model(rp), [](std::uint64_t) { return rotor_default_x0(); }, 200, cfg,
            rotor_lyapunov(rp), opt);
        const EstimateResult conv = estimate_convergence(s, 0.05);
        double worst_coord = 0.0;
        bool coords_ok = true;
        for (std::size_t i = 0; i < s.n_paths; ++i) {
            if (s.blown[i] || !(s.tail_mean_y[i] < 0.05)) continue;
            for (Eigen::Index ci : rotor_y_indices()) {
                const double mean_abs = std::abs(s.tail_coord_mean(i, ci));
                worst_coord = std::max(worst_coord, mean_abs);
                if (mean_abs > 0.05) coords_ok = false;
            }
        }
        report(8, "figs-3-5-rotor-ensemble",
               conv.p_hat >= 0.95 && coords_ok && !s.ceiling_hit && s.blowup_count == 0,
               "convergence p_hat " + fmt(conv.p_hat) + ", worst |tail coord mean| " +
                   fmt(worst_coord) + ", ceiling hit " + (s.ceiling_hit ? "yes" : "no"));
    }

    // 9. Supermartingale checks.
    {
        const double alpha = 1.3498980316300946e-3;  // z = 3
        const double v_scale = jet_summary.v0.cwiseAbs().maxCoeff();
        const auto main_check = supermartingale_check(jet_summary, alpha, 1e-12 * std::max(1.0, v_scale));

        JetParams det;
        det.sigma = Eigen::RowVectorXd::Zero(1);
        const SamplePath dpath = simulate_path(jet_closed_model(det), jet_default_x0(), 0.0,
                                               {1e-3, 50.0, SdeScheme::EulerMaruyama, 10});
        const double worst_step = max_pathwise_v_increase(dpath, jet_lyapunov(det));

        JetParams open_p;
        Eigen::VectorXd spin(jet_dim);
        spin << 1.0, 1.0, 1.0, 0.0, 0.0, 1.0;
        const EnsembleSummary open_summary = run_ensemble(
            jet_open_model(open_p), [&](std::uint64_t) { return spin; }, 50,
            {1e-3, 10.0, SdeScheme::EulerMaruyama, 11}, jet_lyapunov(open_p), {});
        const auto open_check = supermartingale_check(open_summary, alpha, 0.0);

        report(9, "supermartingale",
               main_check.empty() && worst_step <= 1e-6 && open_check.count > 0,
               "jet ensemble violations " + std::to_string(main_check.count) +
                   ", sigma=0 worst step increase " + fmt(worst_step) +
                   " (<= 1e-6), open-loop violations " + std::to_string(open_check.count));
    }

    // 10. Null space of the momentum Hessian.
    {
        const RotorParams p;
        const Eigen::MatrixXd basis = rotor_N_nullspace(p);
        Eigen::MatrixXd expected(5, 2);
        expected.col(0) << -p.I1 / p.A1, 0, 0, 1, 0;
        expected.col(1) << 0, -p.I2 / p.A2, 0, 0, 1;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(expected);
        const Eigen::MatrixXd qexp = qr.householderQ() * Eigen::MatrixXd::Identity(5, 2);
        double dist = 1.0;
        if (basis.cols() == 2)
            dist = (basis * basis.transpose() - qexp * qexp.transpose()).norm();
        report(10, "null-space", basis.cols() == 2 && dist <= 1e-10,
               "dim " + std::to_string(basis.cols()) + ", subspace distance " + fmt(dist));
    }

    // 11. On-M rotor oscillation. The printed equations are the system whose
    //     on-M reduction conserves Omega1^2 + Omega2^2 (the corrected mode
    //     conserves I1^2 Om1^2 + I2^2 Om2^2 instead), so this criterion runs
    //     in as-printed mode; dt is refined until the Euler drift of the
    //     quadratic invariant sits inside the 1e-4 budget.
    {
        RotorParams p;
        p.momentum_fix = MomentumFix::AsPrinted;
        p.sigma = Eigen::RowVectorXd::Zero(1);
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(rotor_dim);
        const double w3 = 0.5;
        x0[2] = w3;
        x0[3] = 1.0;
        x0[4] = -0.5;
        x0[7] = 1.0;
        const SamplePath path = simulate_path(rotor_closed_model(p), x0, 0.0,
                                              {1e-5, 20.0, SdeScheme::EulerMaruyama, 12});
        const auto q = [](const Eigen::VectorXd& x) { return x[3] * x[3] + x[4] * x[4]; };
        const double rel = conserved_drift(path, q).max_abs_dev / q(x0);

        std::vector<double> crossings;
        for (Eigen::Index j = 1; j < path.states.rows(); ++j) {
            const double a = path.states(j - 1, 3), b = path.states(j, 3);
            if (a * b < 0.0) crossings.push_back(path.times[j - 1] + path.dt * a / (a - b));
        }
        double freq = 0.0;
        if (crossings.size() >= 2)
            freq = (static_cast<double>(crossings.size()) - 1.0) /
                   (2.0 * (crossings.back() - crossings.front()));
        const double target = w3 / (2.0 * M_PI);
        const double freq_err = std::abs(freq - target) / target;
        report(11, "on-M-rotor-oscillation", rel <= 1e-4 && freq_err <= 0.02,
               "Om1^2+Om2^2 rel drift " + fmt(rel) + " (<= 1e-4), zero-crossing freq " + fmt(freq) +
                   " vs " + fmt(target) + " (err " + fmt(freq_err) + ", as-printed mode)");
    }

    // 12. Determinism through the CLI: identical bytes for identical configs,
    //     whatever the worker-thread count.
    {
        const auto csv1 = tmp / "det1.csv";
        const auto csv2 = tmp / "det2.csv";
        const auto ens1c = tmp / "ens1.csv";
        const auto ens1j = tmp / "ens1.json";
        const auto ens2c = tmp / "ens2.csv";
        const auto ens2j = tmp / "ens2.json";
        auto run = [&](const std::string& args) {
            const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
            return std::system(cmd.c_str());
        };
        int rc = 0;
        rc |= run("simulate --model jet --horizon 5 --seed 424242 --out-csv " + csv1.string());
        rc |= run("simulate --model jet --horizon 5 --seed 424242 --out-csv " + csv2.string());
        rc |= run("ensemble --model rotor --horizon 5 --n-paths 40 --seed 77 --threads 1 "
                  "--out-csv " + ens1c.string() + " --out-json " + ens1j.string());
        rc |= run("ensemble --model rotor --horizon 5 --n-paths 40 --seed 77 --threads 2 "
                  "--out-csv " + ens2c.string() + " --out-json " + ens2j.string());
        const bool same_sim = slurp(csv1) == slurp(csv2) && !slurp(csv1).empty();
        const bool same_ens = slurp(ens1c) == slurp(ens2c) && slurp(ens1j) == slurp(ens2j) &&
                              !slurp(ens1c).empty();
        report(12, "cli-determinism", rc == 0 && same_sim && same_ens,
               std::string("simulate bytes equal: ") + (same_sim ? "yes" : "no") +
                   ", ensemble bytes equal across 1 vs 2 threads: " + (same_ens ? "yes" : "no"));
    }

    if (g_failures == 0) {
        std::printf("acceptance: all 12 criteria PASS\n");
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return 1;
}
