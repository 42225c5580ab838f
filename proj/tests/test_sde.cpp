#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "stochlab/sde.hpp"

using namespace stochlab;

namespace {

SdeModel zero_model(Eigen::Index n) {
    SdeModel m;
    m.dim_state = n;
    m.dim_noise = 1;
    m.drift = [](const Eigen::VectorXd& x, Eigen::VectorXd& f) { f.setZero(x.size()); };
    m.diffusion = [](const Eigen::VectorXd& x, Eigen::MatrixXd& s) { s.setZero(x.size(), 1); };
    m.diagonal_noise = true;
    m.diffusion_diag_derivative = [](const Eigen::VectorXd& x, Eigen::VectorXd& d) {
        d.setZero(x.size());
    };
    return m;
}

SdeModel linear_decay_model() {
    SdeModel m;
    m.dim_state = 1;
    m.dim_noise = 1;
    m.drift = [](const Eigen::VectorXd& x, Eigen::VectorXd& f) { f[0] = -x[0]; };
    m.diffusion = [](const Eigen::VectorXd&, Eigen::MatrixXd& s) { s(0, 0) = 0.0; };
    m.diagonal_noise = true;
    m.diffusion_diag_derivative = [](const Eigen::VectorXd&, Eigen::VectorXd& d) { d[0] = 0.0; };
    return m;
}

StrongOrderProblem gbm_problem(double mu, double s) {
    StrongOrderProblem p;
    p.model = make_geometric_brownian(mu, s);
    p.x0 = Eigen::VectorXd::Constant(1, 1.0);
    p.horizon = 1.0;
    p.exact_terminal = [mu, s](double horizon, const Eigen::VectorXd& x0, const Eigen::MatrixXd& dW,
                               double) {
        return Eigen::VectorXd::Constant(1, gbm_exact_terminal(mu, s, x0[0], horizon, dW.col(0).sum()))
            .eval();
    };
    return p;
}

}  // namespace

TEST_CASE("identity dynamics leave the state constant") {
    Eigen::VectorXd x0(3);
    x0 << 1.0, 2.0, 3.0;
    const SamplePath path = simulate_path(zero_model(3), x0, 0.0, {0.1, 2.0, SdeScheme::EulerMaruyama, 5});
    for (Eigen::Index j = 0; j < path.states.rows(); ++j)
        REQUIRE(path.states.row(j).transpose() == x0);
}

TEST_CASE("deterministic Euler matches the exponential to its global error") {
    const SamplePath path = simulate_path(linear_decay_model(), Eigen::VectorXd::Constant(1, 1.0),
                                          0.0, {1e-3, 1.0, SdeScheme::EulerMaruyama, 1});
    REQUIRE(std::abs(path.states(path.steps(), 0) - std::exp(-1.0)) <= 1e-3);
}

TEST_CASE("time grid is exact and the initial state is preserved") {
    Eigen::VectorXd x0(1);
    x0 << 0.7;
    const double t0 = 0.25, dt = 1e-3;
    const SamplePath path = simulate_path(linear_decay_model(), x0, t0, {dt, 0.05, SdeScheme::EulerMaruyama, 3});
    REQUIRE(path.states(0, 0) == x0[0]);
    for (Eigen::Index j = 0; j <= path.steps(); ++j)
        REQUIRE(path.times[j] == t0 + static_cast<double>(j) * dt);
}

TEST_CASE("GBM path tracks the closed-form strong solution built from the same noise") {
    const double mu = 0.05, s = 0.2;
    const SdeModel gbm = make_geometric_brownian(mu, s);
    const IntegratorConfig cfg{1e-4, 1.0, SdeScheme::EulerMaruyama, 99};
    const SamplePath path = simulate_path(gbm, Eigen::VectorXd::Constant(1, 1.0), 0.0, cfg);

    double w = 0.0;
    for (Eigen::Index j = 0; j <= path.steps(); ++j) {
        const double exact = gbm_exact_terminal(mu, s, 1.0, path.times[j], w);
        REQUIRE(std::abs(path.states(j, 0) - exact) <= 0.02);
        if (j < path.steps()) w += path.dW(j, 0);
    }

    // Milstein should track the exact solution tighter than Euler-Maruyama.
    const SamplePath mil = simulate_with_increments(gbm, Eigen::VectorXd::Constant(1, 1.0), 0.0,
                                                    cfg.dt, path.dW, SdeScheme::Milstein);
    const double exact_final = gbm_exact_terminal(mu, s, 1.0, 1.0, path.dW.col(0).sum());
    REQUIRE(std::abs(mil.states(mil.steps(), 0) - exact_final) <
            std::abs(path.states(path.steps(), 0) - exact_final) + 1e-12);
}

TEST_CASE("replaying stored increments regenerates the states bit-identically") {
    const SdeModel gbm = make_geometric_brownian(0.05, 0.2);
    const IntegratorConfig cfg{1e-3, 1.0, SdeScheme::EulerMaruyama, 31};
    const SamplePath path = simulate_path(gbm, Eigen::VectorXd::Constant(1, 1.0), 0.0, cfg);
    const SamplePath replay = simulate_with_increments(gbm, Eigen::VectorXd::Constant(1, 1.0), 0.0,
                                                       cfg.dt, path.dW, cfg.scheme);
    REQUIRE(path.states == replay.states);
}

TEST_CASE("repeated simulation with identical inputs is bit-identical") {
    const SdeModel gbm = make_geometric_brownian(0.05, 0.2);
    const IntegratorConfig cfg{1e-3, 1.0, SdeScheme::EulerMaruyama, 123};
    const SamplePath a = simulate_path(gbm, Eigen::VectorXd::Constant(1, 1.0), 0.0, cfg);
    const SamplePath b = simulate_path(gbm, Eigen::VectorXd::Constant(1, 1.0), 0.0, cfg);
    REQUIRE(a.states == b.states);
    REQUIRE(a.dW == b.dW);
}

TEST_CASE("with zero diffusion Euler-Maruyama and Milstein coincide") {
    Eigen::VectorXd x0(1);
    x0 << 2.0;
    const SamplePath em =
        simulate_path(linear_decay_model(), x0, 0.0, {1e-3, 0.5, SdeScheme::EulerMaruyama, 8});
    const SamplePath mil =
        simulate_path(linear_decay_model(), x0, 0.0, {1e-3, 0.5, SdeScheme::Milstein, 8});
    REQUIRE(em.states == mil.states);
}

TEST_CASE("Milstein is refused without diagonal single-column noise") {
    SdeModel m = make_geometric_brownian(0.1, 0.2);
    m.diagonal_noise = false;
    REQUIRE_THROWS_AS(
        simulate_path(m, Eigen::VectorXd::Constant(1, 1.0), 0.0, {1e-2, 0.1, SdeScheme::Milstein, 1}),
        UnsupportedSchemeError);

    SdeModel wide = make_geometric_brownian(0.1, 0.2);
    wide.dim_noise = 2;
    wide.diffusion = [](const Eigen::VectorXd& x, Eigen::MatrixXd& s) {
        s.setZero(1, 2);
        s(0, 0) = 0.2 * x[0];
    };
    REQUIRE_THROWS_AS(
        simulate_path(wide, Eigen::VectorXd::Constant(1, 1.0), 0.0, {1e-2, 0.1, SdeScheme::Milstein, 1}),
        UnsupportedSchemeError);
}

TEST_CASE("a non-finite state aborts the path with the first bad step") {
    SdeModel quad;
    quad.dim_state = 1;
    quad.dim_noise = 1;
    quad.drift = [](const Eigen::VectorXd& x, Eigen::VectorXd& f) { f[0] = x[0] * x[0]; };
    quad.diffusion = [](const Eigen::VectorXd&, Eigen::MatrixXd& s) { s(0, 0) = 0.0; };

    bool thrown = false;
    try {
        simulate_path(quad, Eigen::VectorXd::Constant(1, 5.0), 0.0,
                      {1e-2, 10.0, SdeScheme::EulerMaruyama, 1});
    } catch (const BlowupError& e) {
        thrown = true;
        REQUIRE(e.step > 0);
        REQUIRE(e.partial.states.allFinite());
        REQUIRE(e.partial.states.rows() == static_cast<Eigen::Index>(e.step) + 1);
    }
    REQUIRE(thrown);
}

TEST_CASE("model validation rejects bad y indices and missing evaluators") {
    SdeModel m = linear_decay_model();
    m.y_indices = {0, 0};
    REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
    m.y_indices = {2};
    REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
    m.y_indices = {0};
    REQUIRE_NOTHROW(m.validate());
    m.drift = nullptr;
    REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("invalid integrator configuration is rejected") {
    const SdeModel m = linear_decay_model();
    REQUIRE_THROWS_AS(simulate_path(m, Eigen::VectorXd::Constant(1, 1.0), 0.0,
                                    {0.0, 1.0, SdeScheme::EulerMaruyama, 1}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(simulate_path(m, Eigen::VectorXd::Constant(1, 1.0), 0.0,
                                    {2.0, 1.0, SdeScheme::EulerMaruyama, 1}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(simulate_path(m, Eigen::VectorXd::Constant(2, 1.0), 0.0,
                                    {1e-2, 1.0, SdeScheme::EulerMaruyama, 1}),
                      std::invalid_argument);
}

TEST_CASE("strong order estimates land in the known brackets") {
    const std::vector<double> dts = {std::pow(2.0, -6), std::pow(2.0, -7), std::pow(2.0, -8),
                                     std::pow(2.0, -9), std::pow(2.0, -10)};
    const StrongOrderProblem gbm = gbm_problem(0.05, 0.2);

    const double em_slope = estimate_strong_order(gbm, SdeScheme::EulerMaruyama, dts, 200, 17);
    REQUIRE(em_slope >= 0.4);
    REQUIRE(em_slope <= 0.6);

    const double mil_slope = estimate_strong_order(gbm, SdeScheme::Milstein, dts, 200, 17);
    REQUIRE(mil_slope >= 0.85);
    REQUIRE(mil_slope <= 1.15);

    StrongOrderProblem lin;
    lin.model = linear_decay_model();
    lin.x0 = Eigen::VectorXd::Constant(1, 1.0);
    lin.horizon = 1.0;
    lin.exact_terminal = [](double horizon, const Eigen::VectorXd& x0, const Eigen::MatrixXd&,
                            double) {
        return (x0 * std::exp(-horizon)).eval();
    };
    const double det_slope = estimate_strong_order(lin, SdeScheme::EulerMaruyama, dts, 8, 17);
    REQUIRE(det_slope >= 0.9);
    REQUIRE(det_slope <= 1.1);
}

TEST_CASE("strong order estimation validates its arguments") {
    const StrongOrderProblem gbm = gbm_problem(0.05, 0.2);
    REQUIRE_THROWS_AS(estimate_strong_order(gbm, SdeScheme::EulerMaruyama, {0.1, 0.05, 0.025}, 10, 1),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(
        estimate_strong_order(gbm, SdeScheme::EulerMaruyama, {0.1, 0.2, 0.05, 0.025}, 10, 1),
        std::invalid_argument);
}
