#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stochlab/random.hpp"

namespace stochlab {

enum class SdeScheme { EulerMaruyama, Milstein };

inline const char* to_string(SdeScheme s) {
    return s == SdeScheme::EulerMaruyama ? "euler-maruyama" : "milstein";
}

/// Drift/diffusion descriptor of an Ito system dx = f(x) dt + sigma(x) dW
/// with an n-dimensional state and k-dimensional Wiener input. The indices
/// in y_indices single out the stabilized block y of the state.
///
/// Evaluators must be pure and safe to call from several threads at once.
struct SdeModel {
    Eigen::Index dim_state = 0;
    Eigen::Index dim_noise = 0;
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> drift;
    std::function<void(const Eigen::VectorXd&, Eigen::MatrixXd&)> diffusion;
    std::vector<Eigen::Index> y_indices;

    /// True when k == 1 and row i of the diffusion depends only on x_i.
    /// Required (together with diffusion_diag_derivative) for Milstein.
    bool diagonal_noise = false;
    /// d sigma_i / d x_i for diagonal single-column noise.
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> diffusion_diag_derivative;

    void validate() const {
        if (dim_state < 1) throw std::invalid_argument("SdeModel: dim_state must be positive");
        if (dim_noise < 1) throw std::invalid_argument("SdeModel: dim_noise must be positive");
        if (!drift || !diffusion) throw std::invalid_argument("SdeModel: missing drift or diffusion");
        std::vector<bool> seen(static_cast<std::size_t>(dim_state), false);
        for (Eigen::Index i : y_indices) {
            if (i < 0 || i >= dim_state) throw std::invalid_argument("SdeModel: y index out of range");
            if (seen[static_cast<std::size_t>(i)]) throw std::invalid_argument("SdeModel: duplicate y index");
            seen[static_cast<std::size_t>(i)] = true;
        }
    }

    Eigen::VectorXd drift_at(const Eigen::VectorXd& x) const {
        Eigen::VectorXd f(dim_state);
        drift(x, f);
        return f;
    }

    Eigen::MatrixXd diffusion_at(const Eigen::VectorXd& x) const {
        Eigen::MatrixXd s(dim_state, dim_noise);
        diffusion(x, s);
        return s;
    }

    double y_norm(const Eigen::VectorXd& x) const {
        double q = 0.0;
        for (Eigen::Index i : y_indices) q += x[i] * x[i];
        return std::sqrt(q);
    }
};

struct IntegratorConfig {
    double dt = 1e-3;
    double horizon = 50.0;
    SdeScheme scheme = SdeScheme::EulerMaruyama;
    std::uint64_t seed = 12345;

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("IntegratorConfig: dt must be positive");
        if (!(dt <= horizon)) throw std::invalid_argument("IntegratorConfig: dt must not exceed horizon");
    }

    Eigen::Index steps() const { return static_cast<Eigen::Index>(std::llround(horizon / dt)); }
};

/// One discretized trajectory. times[j] = t0 + j*dt exactly as computed in
/// double arithmetic; states row j is the state at times[j]; dW row j holds
/// the Wiener increments used for step j. Immutable after creation.
struct SamplePath {
    double t0 = 0.0;
    double dt = 0.0;
    Eigen::VectorXd times;   // N+1
    Eigen::MatrixXd states;  // (N+1) x n
    Eigen::MatrixXd dW;      // N x k
    std::uint64_t seed = 0;
    SdeScheme scheme = SdeScheme::EulerMaruyama;

    Eigen::Index steps() const { return dW.rows(); }
    Eigen::Index dim() const { return states.cols(); }
};

struct UnsupportedSchemeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a non-finite state is produced. `step` is the 0-based index of
/// the integration step that blew up; `partial` holds the finite prefix.
struct BlowupError : std::runtime_error {
    BlowupError(std::size_t step_, double time_, SamplePath partial_)
        : std::runtime_error("sde: non-finite state at step " + std::to_string(step_) +
                             ", t = " + std::to_string(time_)),
          step(step_), time(time_), partial(std::move(partial_)) {}
    std::size_t step;
    double time;
    SamplePath partial;
};

namespace detail {

inline void require_milstein_support(const SdeModel& m) {
    if (m.dim_noise != 1 || !m.diagonal_noise || !m.diffusion_diag_derivative)
        throw UnsupportedSchemeError(
            "Milstein requires k == 1 diagonal noise with a diagonal diffusion derivative");
}

/// Fixed-step strong integration core. `noise(j, dw)` fills the increments of
/// step j; `observe(j, t, x)` is called for the initial state (j = 0) and
/// after every finite step. Returns the blow-up step index, if any.
template <class NoiseFn, class Observer>
std::optional<std::size_t> integrate_core(const SdeModel& model, const Eigen::VectorXd& x0,
                                          double t0, double dt, Eigen::Index steps,
                                          SdeScheme scheme, NoiseFn&& noise, Observer&& observe) {
    model.validate();
    if (x0.size() != model.dim_state)
        throw std::invalid_argument("integrate: x0 has wrong dimension");
    if (scheme == SdeScheme::Milstein) require_milstein_support(model);

    const Eigen::Index n = model.dim_state;
    const Eigen::Index k = model.dim_noise;
    Eigen::VectorXd x = x0;
    Eigen::VectorXd f(n), dsig(n), dw(k);
    Eigen::MatrixXd s(n, k);

    observe(Eigen::Index{0}, t0, x);
    for (Eigen::Index j = 0; j < steps; ++j) {
        model.drift(x, f);
        model.diffusion(x, s);
        noise(j, dw);
        if (scheme == SdeScheme::Milstein) {
            model.diffusion_diag_derivative(x, dsig);
            const double q = dw[0] * dw[0] - dt;
            for (Eigen::Index i = 0; i < n; ++i)
                x[i] += f[i] * dt + s(i, 0) * dw[0] + 0.5 * s(i, 0) * dsig[i] * q;
        } else {
            x += f * dt + s * dw;
        }
        if (!x.allFinite()) return static_cast<std::size_t>(j);
        observe(j + 1, t0 + static_cast<double>(j + 1) * dt, x);
    }
    return std::nullopt;
}

}  // namespace detail

/// Replay a stored increment matrix through the scheme. Regenerates the
/// states of the originating run bit-identically.
inline SamplePath simulate_with_increments(const SdeModel& model, const Eigen::VectorXd& x0,
                                           double t0, double dt, const Eigen::MatrixXd& dW,
                                           SdeScheme scheme = SdeScheme::EulerMaruyama,
                                           std::uint64_t seed = 0) {
    if (!(dt > 0.0)) throw std::invalid_argument("simulate_with_increments: dt must be positive");
    if (dW.cols() != model.dim_noise)
        throw std::invalid_argument("simulate_with_increments: dW has wrong column count");

    const Eigen::Index steps = dW.rows();
    SamplePath path;
    path.t0 = t0;
    path.dt = dt;
    path.seed = seed;
    path.scheme = scheme;
    path.times.resize(steps + 1);
    path.states.resize(steps + 1, model.dim_state);
    path.dW = dW;

    auto blow = detail::integrate_core(
        model, x0, t0, dt, steps, scheme,
        [&](Eigen::Index j, Eigen::VectorXd& dw) { dw = dW.row(j).transpose(); },
        [&](Eigen::Index j, double t, const Eigen::VectorXd& x) {
            path.times[j] = t;
            path.states.row(j) = x.transpose();
        });

    if (blow) {
        const std::size_t j = *blow;
        SamplePath partial = path;
        partial.times.conservativeResize(static_cast<Eigen::Index>(j) + 1);
        partial.states.conservativeResize(static_cast<Eigen::Index>(j) + 1, model.dim_state);
        partial.dW.conservativeResize(static_cast<Eigen::Index>(j), model.dim_noise);
        throw BlowupError(j, t0 + static_cast<double>(j + 1) * dt, std::move(partial));
    }
    return path;
}

/// Integrate the model from x0 with freshly drawn Wiener increments.
inline SamplePath simulate_path(const SdeModel& model, const Eigen::VectorXd& x0, double t0,
                                const IntegratorConfig& config) {
    config.validate();
    const Eigen::Index steps = config.steps();
    if (steps < 1) throw std::invalid_argument("simulate_path: horizon shorter than one step");
    Eigen::MatrixXd dW = wiener_increments(model.dim_noise, steps, config.dt, config.seed);
    return simulate_with_increments(model, x0, t0, config.dt, dW, config.scheme, config.seed);
}

/// Scalar geometric Brownian motion dx = mu x dt + s x dW. Supports Milstein.
inline SdeModel make_geometric_brownian(double mu, double s) {
    SdeModel m;
    m.dim_state = 1;
    m.dim_noise = 1;
    m.drift = [mu](const Eigen::VectorXd& x, Eigen::VectorXd& f) { f[0] = mu * x[0]; };
    m.diffusion = [s](const Eigen::VectorXd& x, Eigen::MatrixXd& g) { g(0, 0) = s * x[0]; };
    m.diagonal_noise = true;
    m.diffusion_diag_derivative = [s](const Eigen::VectorXd&, Eigen::VectorXd& d) { d[0] = s; };
    m.y_indices = {0};
    return m;
}

/// Exact pathwise GBM solution built from the same Wiener path:
/// x0 * exp((mu - s^2/2) T + s W_T).
inline double gbm_exact_terminal(double mu, double s, double x0, double horizon, double w_terminal) {
    return x0 * std::exp((mu - 0.5 * s * s) * horizon + s * w_terminal);
}

/// A model together with its exact pathwise solution, used to qualify the
/// integrator's strong convergence order.
struct StrongOrderProblem {
    SdeModel model;
    Eigen::VectorXd x0;
    double t0 = 0.0;
    double horizon = 1.0;
    /// Exact terminal state as a function of the realized increments.
    std::function<Eigen::VectorXd(double horizon, const Eigen::VectorXd& x0,
                                  const Eigen::MatrixXd& dW, double dt)>
        exact_terminal;
};

/// Least-squares slope of log(mean terminal strong error) versus log(dt).
inline double estimate_strong_order(const StrongOrderProblem& problem, SdeScheme scheme,
                                    const std::vector<double>& dts, int n_paths,
                                    std::uint64_t seed) {
    if (dts.size() < 4)
        throw std::invalid_argument("estimate_strong_order: need at least 4 step sizes");
    for (std::size_t i = 0; i < dts.size(); ++i) {
        if (!(dts[i] > 0.0)) throw std::invalid_argument("estimate_strong_order: dt must be positive");
        if (i > 0 && !(dts[i] < dts[i - 1]))
            throw std::invalid_argument("estimate_strong_order: dts must be strictly decreasing");
    }
    if (n_paths < 1) throw std::invalid_argument("estimate_strong_order: n_paths must be >= 1");
    if (!problem.exact_terminal)
        throw std::invalid_argument("estimate_strong_order: exact solution missing");

    std::vector<double> log_dt, log_err;
    for (std::size_t idt = 0; idt < dts.size(); ++idt) {
        const double dt = dts[idt];
        const auto steps = static_cast<Eigen::Index>(std::llround(problem.horizon / dt));
        double err_sum = 0.0;
        for (int p = 0; p < n_paths; ++p) {
            const std::uint64_t stream = mix_seed(seed, idt, static_cast<std::uint64_t>(p));
            Eigen::MatrixXd dW = wiener_increments(problem.model.dim_noise, steps, dt, stream);
            SamplePath path =
                simulate_with_increments(problem.model, problem.x0, problem.t0, dt, dW, scheme);
            Eigen::VectorXd exact = problem.exact_terminal(problem.horizon, problem.x0, dW, dt);
            err_sum += (path.states.row(steps).transpose() - exact).norm();
        }
        log_dt.push_back(std::log(dt));
        log_err.push_back(std::log(err_sum / n_paths));
    }

    const auto n = static_cast<double>(log_dt.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < log_dt.size(); ++i) {
        mx += log_dt[i];
        my += log_err[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < log_dt.size(); ++i) {
        sxx += (log_dt[i] - mx) * (log_dt[i] - mx);
        sxy += (log_dt[i] - mx) * (log_err[i] - my);
    }
    return sxy / sxx;
}

}  // namespace stochlab
