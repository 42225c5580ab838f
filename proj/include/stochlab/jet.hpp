#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stochlab/field.hpp"
#include "stochlab/generator.hpp"
#include "stochlab/sde.hpp"

namespace stochlab {

/// Euler-Poisson rigid body driven by jet torques on the first two axes.
/// State layout: (omega1, omega2, omega3, nu1, nu2, nu3), dimensionless.
/// omega is the body angular velocity, nu the fixed direction expressed in
/// body axes; the stabilized block is y = (omega1, omega2, nu1, nu2).
struct JetParams {
    double A1 = 1.0;  // principal moments of inertia
    double A2 = 3.0;
    double A3 = 2.0;
    Eigen::RowVectorXd sigma = Eigen::RowVectorXd::Constant(1, 0.2);  // noise intensity row
    double eps = 0.01;  // additive floor of the gain function h

    void validate() const {
        if (!(A1 > 0.0 && A2 > 0.0 && A3 > 0.0))
            throw std::invalid_argument("JetParams: moments must be positive");
        if (!(eps > 0.0)) throw std::invalid_argument("JetParams: eps must be positive");
        if (sigma.size() < 1) throw std::invalid_argument("JetParams: sigma must have length >= 1");
    }

    double sigma_sq() const { return sigma.squaredNorm(); }  // sigma sigma^T
    Eigen::Index noise_dim() const { return sigma.size(); }
};

inline constexpr Eigen::Index jet_dim = 6;

inline std::vector<Eigen::Index> jet_y_indices() { return {0, 1, 3, 4}; }

inline std::vector<std::string> jet_state_names() {
    return {"omega1", "omega2", "omega3", "nu1", "nu2", "nu3"};
}

/// Uncontrolled particular solution: rest with the third axis along nu.
inline Eigen::VectorXd jet_equilibrium() {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(jet_dim);
    x[5] = 1.0;
    return x;
}

/// Default initial state for path and ensemble experiments; nu has unit norm.
inline Eigen::VectorXd jet_default_x0() {
    Eigen::VectorXd x(jet_dim);
    x << 0.5, -0.5, 0.3, 0.1, 0.1, std::sqrt(1.0 - 0.02);
    return x;
}

/// Gain function h = |(A1 - A2) / (2 A1 A2) * omega3| + eps. Strictly
/// positive, and large enough that h (A1^2 w1^2 + A2^2 w2^2) dominates the
/// gyroscopic cross term (A1 - A2) w1 w2 w3.
inline double jet_h(const JetParams& p, const Eigen::VectorXd& x) {
    return std::abs((p.A1 - p.A2) / (2.0 * p.A1 * p.A2) * x[2]) + p.eps;
}

/// Stabilizing feedback (u1, u2). Each term carries a factor from the
/// stabilized block, so u vanishes identically on M.
inline Eigen::Vector2d jet_feedback(const JetParams& p, const Eigen::VectorXd& x) {
    const double w1 = x[0], w2 = x[1], w3 = x[2];
    const double n1 = x[3], n2 = x[4], n3 = x[5];
    const double h = jet_h(p, x);
    const double ss = p.sigma_sq();
    const double abs_dA = std::abs(p.A1 - p.A2);
    const double brace1 = abs_dA / (2.0 * p.A1) * std::abs(w3) + p.A1 * h + 0.5 * ss;
    const double brace2 = abs_dA / (2.0 * p.A2) * std::abs(w3) + p.A2 * h + 0.5 * ss;
    Eigen::Vector2d u;
    u[0] = w2 * w3 - (n2 * n3) / p.A1 - brace1 * w1;
    u[1] = -w1 * w3 + (n1 * n3) / p.A2 - brace2 * w2;
    return u;
}

/// Open-loop drift with the controls (u1, u2) inserted. Products are grouped
/// so that every y-row evaluates to an exact floating-point zero on M.
inline Eigen::VectorXd jet_drift_open(const JetParams& p, const Eigen::VectorXd& x,
                                      const Eigen::Vector2d& u) {
    const double w1 = x[0], w2 = x[1], w3 = x[2];
    const double n1 = x[3], n2 = x[4], n3 = x[5];
    Eigen::VectorXd f(jet_dim);
    f[0] = (p.A2 - p.A3) / p.A1 * (w2 * w3) + u[0];
    f[1] = (p.A3 - p.A1) / p.A2 * (w1 * w3) + u[1];
    f[2] = (p.A1 - p.A2) / p.A3 * (w1 * w2);
    f[3] = w3 * n2 - w2 * n3;
    f[4] = w1 * n3 - w3 * n1;
    f[5] = w2 * n1 - w1 * n2;
    return f;
}

/// Multiplicative noise rows: omega1 and omega2 carry sigma, all else zero.
inline void jet_diffusion(const JetParams& p, const Eigen::VectorXd& x, Eigen::MatrixXd& s) {
    s.setZero(jet_dim, p.noise_dim());
    s.row(0) = x[0] * p.sigma;
    s.row(1) = x[1] * p.sigma;
}

namespace detail {

inline SdeModel jet_model_with_control(
    const JetParams& p, std::function<Eigen::Vector2d(const JetParams&, const Eigen::VectorXd&)> u) {
    p.validate();
    SdeModel m;
    m.dim_state = jet_dim;
    m.dim_noise = p.noise_dim();
    m.y_indices = jet_y_indices();
    m.drift = [p, u](const Eigen::VectorXd& x, Eigen::VectorXd& f) {
        f = jet_drift_open(p, x, u(p, x));
    };
    m.diffusion = [p](const Eigen::VectorXd& x, Eigen::MatrixXd& s) { jet_diffusion(p, x, s); };
    if (p.noise_dim() == 1) {
        // Row i of the diffusion depends only on x_i, so Milstein applies.
        m.diagonal_noise = true;
        const double s0 = p.sigma[0];
        m.diffusion_diag_derivative = [s0](const Eigen::VectorXd&, Eigen::VectorXd& d) {
            d.setZero(jet_dim);
            d[0] = s0;
            d[1] = s0;
        };
    }
    return m;
}

}  // namespace detail

/// Closed-loop jet system (drift composed with jet_feedback).
inline SdeModel jet_closed_model(const JetParams& p) {
    return detail::jet_model_with_control(p, [](const JetParams& q, const Eigen::VectorXd& x) {
        return jet_feedback(q, x);
    });
}

/// Uncontrolled system (u = 0); negative control for the sign scans.
inline SdeModel jet_open_model(const JetParams& p) {
    return detail::jet_model_with_control(
        p, [](const JetParams&, const Eigen::VectorXd&) { return Eigen::Vector2d::Zero().eval(); });
}

/// V = 1/2 (A1 w1^2 + A2 w2^2) + 1/2 (nu1^2 + nu2^2).
inline ScalarField jet_lyapunov(const JetParams& p) {
    p.validate();
    Eigen::VectorXd w(jet_dim);
    w << p.A1, p.A2, 0.0, 1.0, 1.0, 0.0;
    return make_diag_quadratic_field(w);
}

/// Closed form of L V for the closed loop:
///   -|A1 - A2|/2 |w3| (w1^2 + w2^2) - h (A1^2 w1^2 + A2^2 w2^2).
/// The sigma terms of the feedback cancel the second-order generator terms
/// exactly, so the value is independent of sigma. Always <= 0.
inline double jet_LV_analytic(const JetParams& p, const Eigen::VectorXd& x) {
    const double w1 = x[0], w2 = x[1], w3 = x[2];
    const double h = jet_h(p, x);
    return -std::abs(p.A1 - p.A2) / 2.0 * std::abs(w3) * (w1 * w1 + w2 * w2) -
           h * (p.A1 * p.A1 * w1 * w1 + p.A2 * p.A2 * w2 * w2);
}

/// Auxiliary function W = 1/2 (A1 w1^2 + A2 w2^2 + A3 w3^2) + 1/2 (nu1^2 + nu2^2),
/// positive definite and radially unbounded in omega; certifies omega-boundedness.
inline ScalarField jet_aux_W(const JetParams& p) {
    p.validate();
    Eigen::VectorXd w(jet_dim);
    w << p.A1, p.A2, p.A3, 1.0, 1.0, 0.0;
    return make_diag_quadratic_field(w);
}

/// Closed form of L W for the closed loop:
///   (A1 - A2) w1 w2 w3 - |A1 - A2|/2 |w3| (w1^2 + w2^2) - h (A1^2 w1^2 + A2^2 w2^2).
/// Nonpositive everywhere by the choice of h.
inline double jet_LW_analytic(const JetParams& p, const Eigen::VectorXd& x) {
    const double w1 = x[0], w2 = x[1], w3 = x[2];
    const double h = jet_h(p, x);
    return (p.A1 - p.A2) * w1 * w2 * w3 -
           std::abs(p.A1 - p.A2) / 2.0 * std::abs(w3) * (w1 * w1 + w2 * w2) -
           h * (p.A1 * p.A1 * w1 * w1 + p.A2 * p.A2 * w2 * w2);
}

/// Forcing terms that push a point of M_v \ M off the zero set of L V:
/// the constrained system on M_v requires nu2 nu3 / A1 = nu1 nu3 / A2 = 0.
inline std::function<Eigen::VectorXd(const Eigen::VectorXd&)> jet_mv_residual(const JetParams& p) {
    return [p](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(2);
        r[0] = x[4] * x[5] / p.A1;
        r[1] = x[3] * x[5] / p.A2;
        return r;
    };
}

/// Exact quadratic sandwich from the coefficient extrema of V.
inline SandwichBounds jet_sandwich_bounds(const JetParams& p) {
    SandwichBounds b;
    b.c1 = 0.5 * std::min({p.A1, p.A2, 1.0});
    b.c2 = 0.5 * std::max({p.A1, p.A2, 1.0});
    return b;
}

/// Geometric integral nu1^2 + nu2^2 + nu3^2, conserved by the flow.
inline double jet_geometric_integral(const Eigen::VectorXd& x) {
    return x[3] * x[3] + x[4] * x[4] + x[5] * x[5];
}

}  // namespace stochlab
