#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stochlab/field.hpp"
#include "stochlab/generator.hpp"
#include "stochlab/sde.hpp"

namespace stochlab {

/// Gain choice for the rotor feedback. The constant variant h = eps is the
/// minimal one (L V <= 0 needs only h > 0); the jet-style variant mirrors the
/// gain of the jet system for comparison runs.
enum class HMode { ConstantEps, JetStyle };

/// The printed rotor equations carry 1/I2 u1 and 1/I1 u2 as the leading
/// control coefficients; that pairing breaks the momentum integrals W1, W2.
/// Corrected swaps them to 1/I1 u1 and 1/I2 u2, which removes all control
/// terms from d(A_i w_i + I_i Om_i). AsPrinted is kept for fidelity runs.
enum class MomentumFix { AsPrinted, Corrected };

/// Rigid body with a pair of symmetric rotors on the first two axes.
/// State layout: (omega1, omega2, omega3, Omega1, Omega2, nu1, nu2, nu3),
/// where Omega_i are rotor speeds relative to the carrier. Stabilized block
/// y = (omega1, omega2, nu1, nu2).
struct RotorParams {
    double A1 = 10.0;  // moments of the whole assembly
    double A2 = 31.0;
    double A3 = 22.0;
    double I1 = 8.0;   // rotor moments
    double I2 = 27.0;
    Eigen::RowVectorXd sigma = Eigen::RowVectorXd::Constant(1, 0.2);
    double eps = 1e-3;
    HMode h_mode = HMode::ConstantEps;
    MomentumFix momentum_fix = MomentumFix::Corrected;

    void validate() const {
        if (!(A1 > 0.0 && A2 > 0.0 && A3 > 0.0 && I1 > 0.0 && I2 > 0.0))
            throw std::invalid_argument("RotorParams: moments must be positive");
        if (!(A1 > I1 && A2 > I2))
            throw std::invalid_argument("RotorParams: requires A1 > I1 and A2 > I2");
        if (!(eps > 0.0)) throw std::invalid_argument("RotorParams: eps must be positive");
        if (sigma.size() < 1) throw std::invalid_argument("RotorParams: sigma must have length >= 1");
    }

    double sigma_sq() const { return sigma.squaredNorm(); }
    Eigen::Index noise_dim() const { return sigma.size(); }
};

inline constexpr Eigen::Index rotor_dim = 8;

inline std::vector<Eigen::Index> rotor_y_indices() { return {0, 1, 5, 6}; }

inline std::vector<std::string> rotor_state_names() {
    return {"omega1", "omega2", "omega3", "Omega1", "Omega2", "nu1", "nu2", "nu3"};
}

/// Uncontrolled equilibrium: omega = 0, rotors spinning at (Om1, Om2),
/// third axis along nu.
inline Eigen::VectorXd rotor_equilibrium(double Om1, double Om2) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(rotor_dim);
    x[3] = Om1;
    x[4] = Om2;
    x[7] = 1.0;
    return x;
}

inline Eigen::VectorXd rotor_default_x0() {
    Eigen::VectorXd x(rotor_dim);
    x << 0.3, -0.2, 0.25, 1.0, -0.5, 0.1, 0.1, std::sqrt(1.0 - 0.02);
    return x;
}

inline double rotor_h(const RotorParams& p, const Eigen::VectorXd& x) {
    if (p.h_mode == HMode::JetStyle)
        return std::abs(p.A1 - p.A2) / 2.0 * std::abs(x[2]) + p.eps;
    return p.eps;
}

/// Feedback applied to the rotors. On M it reduces to u1 = I2 Om2 w3,
/// u2 = -I1 Om1 w3, exactly the torques that hold omega still there.
inline Eigen::Vector2d rotor_feedback(const RotorParams& p, const Eigen::VectorXd& x) {
    const double w1 = x[0], w2 = x[1], w3 = x[2];
    const double O1 = x[3], O2 = x[4];
    const double n1 = x[5], n2 = x[6], n3 = x[7];
    const double h = rotor_h(p, x);
    const double ss = p.sigma_sq();
    const double gyro = std::abs(p.A1 - p.A2) / 2.0 * std::abs(w3);
    Eigen::Vector2d u;
    u[0] = n2 * n3 + (p.A2 * w2 + p.I2 * O2) * w3 + w1 * (h + 0.5 * ss * (p.A1 - p.I1) + gyro);
    u[1] = -(n1 * n3) - (p.A1 * w1 + p.I1 * O1) * w3 + w2 * (h + 0.5 * ss * (p.A2 - p.I2) + gyro);
    return u;
}

/// Open-loop drift with injected controls. The omega rows and the trailing
/// part of the Omega rows are grouped identically, so d Omega_i = lead u_i -
/// d omega_i holds term by term and the y-rows cancel exactly on M.
inline Eigen::VectorXd rotor_drift_open(const RotorParams& p, const Eigen::VectorXd& x,
                                        const Eigen::Vector2d& u) {
    const double w1 = x[0], w2 = x[1], w3 = x[2];
    const double O1 = x[3], O2 = x[4];
    const double n1 = x[5], n2 = x[6], n3 = x[7];
    const double lead1 = (p.momentum_fix == MomentumFix::Corrected) ? 1.0 / p.I1 : 1.0 / p.I2;
    const double lead2 = (p.momentum_fix == MomentumFix::Corrected) ? 1.0 / p.I2 : 1.0 / p.I1;
    Eigen::VectorXd f(rotor_dim);
    f[0] = ((p.A2 - p.A3) * (w2 * w3) + (p.I2 * O2) * w3 - u[0]) / (p.A1 - p.I1);
    f[1] = ((p.A3 - p.A1) * (w1 * w3) - (p.I1 * O1) * w3 - u[1]) / (p.A2 - p.I2);
    f[2] = ((p.A1 - p.A2) * (w1 * w2) + (p.I1 * O1) * w2 - (p.I2 * O2) * w1) / p.A3;
    f[3] = lead1 * u[0] - f[0];
    f[4] = lead2 * u[1] - f[1];
    f[5] = w3 * n2 - w2 * n3;
    f[6] = w1 * n3 - w3 * n1;
    f[7] = w2 * n1 - w1 * n2;
    return f;
}

/// Noise rows: omega1/omega2 carry +sigma, Omega1/Omega2 the exact negation,
/// so the momentum combinations A_i w_i + I_i Om_i see (A_i - I_i) w_i sigma.
inline void rotor_diffusion(const RotorParams& p, const Eigen::VectorXd& x, Eigen::MatrixXd& s) {
    s.setZero(rotor_dim, p.noise_dim());
    s.row(0) = x[0] * p.sigma;
    s.row(1) = x[1] * p.sigma;
    s.row(3) = -s.row(0);
    s.row(4) = -s.row(1);
}

/// Closed-loop rotor system.
inline SdeModel rotor_closed_model(const RotorParams& p) {
    p.validate();
    SdeModel m;
    m.dim_state = rotor_dim;
    m.dim_noise = p.noise_dim();
    m.y_indices = rotor_y_indices();
    m.drift = [p](const Eigen::VectorXd& x, Eigen::VectorXd& f) {
        f = rotor_drift_open(p, x, rotor_feedback(p, x));
    };
    m.diffusion = [p](const Eigen::VectorXd& x, Eigen::MatrixXd& s) { rotor_diffusion(p, x, s); };
    // Row 3 depends on x[0] (and row 4 on x[1]), so the noise is not diagonal
    // and Milstein stays unavailable for this model.
    m.diagonal_noise = false;
    return m;
}

/// 2V = (A1 - I1) w1^2 + (A2 - I2) w2^2 + nu1^2 + nu2^2.
inline ScalarField rotor_lyapunov(const RotorParams& p) {
    p.validate();
    Eigen::VectorXd w(rotor_dim);
    w << p.A1 - p.I1, p.A2 - p.I2, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0;
    return make_diag_quadratic_field(w);
}

/// Closed form of L V: -(w1^2 + w2^2)(h + |A1 - A2|/2 |w3|), sigma-independent
/// by the same cancellation as in the jet system. Identical in both momentum
/// modes since V does not involve Omega.
inline double rotor_LV_analytic(const RotorParams& p, const Eigen::VectorXd& x) {
    const double w1 = x[0], w2 = x[1], w3 = x[2];
    const double damp = rotor_h(p, x) + std::abs(p.A1 - p.A2) / 2.0 * std::abs(w3);
    return -(w1 * w1) * damp - (w2 * w2) * damp;
}

/// The three first integrals of the body-plus-rotors system:
///   W1 = ||G||^2, W2 = G . nu, W3 = ||nu||^2,
/// with G = (A1 w1 + I1 Om1, A2 w2 + I2 Om2, A3 w3) the total momentum.
inline std::array<double, 3> rotor_integrals(const RotorParams& p, const Eigen::VectorXd& x) {
    const double g1 = p.A1 * x[0] + p.I1 * x[3];
    const double g2 = p.A2 * x[1] + p.I2 * x[4];
    const double g3 = p.A3 * x[2];
    const double w1 = g1 * g1 + g2 * g2 + g3 * g3;
    const double w2 = g1 * x[5] + g2 * x[6] + g3 * x[7];
    const double w3 = x[5] * x[5] + x[6] * x[6] + x[7] * x[7];
    return {w1, w2, w3};
}

/// Hessian of W1 in the variables (w1, w2, w3, Om1, Om2). Built as the true
/// symmetric Hessian; its kernel is what the sigma-in-N condition refers to.
inline Eigen::MatrixXd rotor_Q_matrix(const RotorParams& p) {
    p.validate();
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(5, 5);
    q(0, 0) = 2.0 * p.A1 * p.A1;
    q(1, 1) = 2.0 * p.A2 * p.A2;
    q(2, 2) = 2.0 * p.A3 * p.A3;
    q(3, 3) = 2.0 * p.I1 * p.I1;
    q(4, 4) = 2.0 * p.I2 * p.I2;
    q(0, 3) = q(3, 0) = 2.0 * p.A1 * p.I1;
    q(1, 4) = q(4, 1) = 2.0 * p.A2 * p.I2;
    return q;
}

/// Orthonormal basis of the zero-eigenvalue subspace N of Q. Spans
/// {(-I1/A1, 0, 0, 1, 0), (0, -I2/A2, 0, 0, 1)}.
inline Eigen::MatrixXd rotor_N_nullspace(const RotorParams& p) {
    const Eigen::MatrixXd q = rotor_Q_matrix(p);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("rotor_N_nullspace: eigendecomposition failed");
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    const double tol = 1e-9 * std::max(1.0, scale);
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < 5; ++i)
        if (std::abs(es.eigenvalues()[i]) <= tol) ++count;
    Eigen::MatrixXd basis(5, count);
    Eigen::Index c = 0;
    for (Eigen::Index i = 0; i < 5; ++i)
        if (std::abs(es.eigenvalues()[i]) <= tol) basis.col(c++) = es.eigenvectors().col(i);
    return basis;
}

/// Whether a constant vector in (w1, w2, w3, Om1, Om2) coordinates lies in N.
inline bool rotor_N_contains(const RotorParams& p, const Eigen::VectorXd& v, double tol = 1e-10) {
    if (v.size() != 5) throw std::invalid_argument("rotor_N_contains: expected a 5-vector");
    const Eigen::MatrixXd basis = rotor_N_nullspace(p);
    const Eigen::VectorXd resid = v - basis * (basis.transpose() * v);
    return resid.norm() <= tol * std::max(1.0, v.norm());
}

/// Constraint residuals of the reduced system on M_v = {w1 = w2 = 0}:
/// staying there forces nu2 nu3 = nu1 nu3 = 0.
inline std::function<Eigen::VectorXd(const Eigen::VectorXd&)> rotor_mv_residual(
    const RotorParams&) {
    return [](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(2);
        r[0] = x[6] * x[7];
        r[1] = x[5] * x[7];
        return r;
    };
}

inline SandwichBounds rotor_sandwich_bounds(const RotorParams& p) {
    SandwichBounds b;
    b.c1 = 0.5 * std::min({p.A1 - p.I1, p.A2 - p.I2, 1.0});
    b.c2 = 0.5 * std::max({p.A1 - p.I1, p.A2 - p.I2, 1.0});
    return b;
}

}  // namespace stochlab
