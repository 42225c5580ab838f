#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "stochlab/field.hpp"
#include "stochlab/sampling.hpp"
#include "stochlab/sde.hpp"

namespace stochlab {

/// Ito generator applied to a scalar field at x:
///   L V = grad V . f + 1/2 trace(sigma sigma^T Hess V).
inline double apply_generator(const SdeModel& model, const ScalarField& field,
                              const Eigen::VectorXd& x) {
    if (x.size() != model.dim_state)
        throw std::invalid_argument("apply_generator: state has wrong dimension");
    Eigen::VectorXd f(model.dim_state);
    model.drift(x, f);
    Eigen::VectorXd g = field.gradient_at(x);
    if (g.size() != model.dim_state)
        throw std::invalid_argument("apply_generator: gradient has wrong dimension");
    Eigen::MatrixXd s(model.dim_state, model.dim_noise);
    model.diffusion(x, s);
    if (s.rows() != model.dim_state || s.cols() != model.dim_noise)
        throw std::invalid_argument("apply_generator: diffusion has wrong shape");
    Eigen::MatrixXd h = field.hessian_at(x);
    // trace(s s^T h) accumulated column-wise: sum_l col_l^T h col_l.
    double second = 0.0;
    for (Eigen::Index l = 0; l < s.cols(); ++l) second += s.col(l).dot(h * s.col(l));
    return g.dot(f) + 0.5 * second;
}

/// Central difference of a value function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& value,
                                   const Eigen::VectorXd& x, double h) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x, xm = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        g[i] = (value(xp) - value(xm)) / (2.0 * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return g;
}

/// Central difference of a gradient function, column j = d(grad)/dx_j.
inline Eigen::MatrixXd fd_hessian_from_gradient(const ScalarField& field,
                                                const Eigen::VectorXd& x, double h) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd hess(n, n);
    Eigen::VectorXd gp(n), gm(n), xp = x, xm = x;
    for (Eigen::Index j = 0; j < n; ++j) {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        field.gradient(xp, gp);
        field.gradient(xm, gm);
        hess.col(j) = (gp - gm) / (2.0 * h);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    return hess;
}

/// Value-only second differences. Roundoff grows like eps*|V|/h^2, so this is
/// the oracle of last resort; consistency checks chain through the gradient.
inline Eigen::MatrixXd fd_hessian_of_value(const std::function<double(const Eigen::VectorXd&)>& value,
                                           const Eigen::VectorXd& x, double h) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd hess(n, n);
    const double v0 = value(x);
    Eigen::VectorXd xa = x;
    for (Eigen::Index i = 0; i < n; ++i) {
        xa[i] = x[i] + h;
        const double vp = value(xa);
        xa[i] = x[i] - h;
        const double vm = value(xa);
        xa[i] = x[i];
        hess(i, i) = (vp - 2.0 * v0 + vm) / (h * h);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            xa[i] = x[i] + h;
            xa[j] = x[j] + h;
            const double vpp = value(xa);
            xa[j] = x[j] - h;
            const double vpm = value(xa);
            xa[i] = x[i] - h;
            const double vmm = value(xa);
            xa[j] = x[j] + h;
            const double vmp = value(xa);
            xa[i] = x[i];
            xa[j] = x[j];
            hess(i, j) = hess(j, i) = (vpp - vpm - vmp + vmm) / (4.0 * h * h);
        }
    }
    return hess;
}

struct FdResiduals {
    double grad_residual = 0.0;
    double hess_residual = 0.0;
};

/// Max-norm mismatch of the supplied derivatives against central finite
/// differences with step h. The gradient is checked against differences of
/// the value; the Hessian against differences of the supplied gradient (one
/// derivative order per difference keeps the check at roundoff level).
inline FdResiduals fd_consistency_check(const ScalarField& field, const Eigen::VectorXd& x,
                                        double h) {
    if (!(h > 0.0)) throw std::invalid_argument("fd_consistency_check: h must be positive");
    FdResiduals r;
    r.grad_residual =
        (field.gradient_at(x) - fd_gradient(field.value, x, h)).cwiseAbs().maxCoeff();
    r.hess_residual =
        (field.hessian_at(x) - fd_hessian_from_gradient(field, x, h)).cwiseAbs().maxCoeff();
    return r;
}

/// Value-only reconstruction of L V at x, using central differences for both
/// the gradient and the Hessian. Used to cross-check apply_generator.
inline double fd_apply_generator(const SdeModel& model,
                                 const std::function<double(const Eigen::VectorXd&)>& value,
                                 const Eigen::VectorXd& x, double h_grad, double h_hess) {
    Eigen::VectorXd f(model.dim_state);
    model.drift(x, f);
    Eigen::MatrixXd s(model.dim_state, model.dim_noise);
    model.diffusion(x, s);
    const Eigen::VectorXd g = fd_gradient(value, x, h_grad);
    const Eigen::MatrixXd hess = fd_hessian_of_value(value, x, h_hess);
    double second = 0.0;
    for (Eigen::Index l = 0; l < s.cols(); ++l) second += s.col(l).dot(hess * s.col(l));
    return g.dot(f) + 0.5 * second;
}

/// Quadratic comparison bounds c1 r^2 <= V <= c2 r^2 on r = ||y||.
struct SandwichBounds {
    double c1 = 0.0;
    double c2 = 0.0;
    double exponent = 2.0;

    void validate() const {
        if (!(c1 > 0.0) || !(c2 > 0.0)) throw std::invalid_argument("SandwichBounds: c must be positive");
        if (!(c1 <= c2)) throw std::invalid_argument("SandwichBounds: c1 must not exceed c2");
    }
};

struct SandwichViolation {
    Eigen::VectorXd state;
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// Flags sampled states where V leaves [c1 ||y||^e, c2 ||y||^e]. An empty
/// result means the sandwich holds on the sample.
inline std::vector<SandwichViolation> sandwich_check(const ScalarField& field,
                                                     const std::vector<Eigen::Index>& y_indices,
                                                     const SandwichBounds& bounds,
                                                     const RegionSampler& sampler, std::size_t n) {
    bounds.validate();
    if (n < 1) throw std::invalid_argument("sandwich_check: n must be >= 1");
    std::vector<SandwichViolation> out;
    sampler.for_each(n, [&](std::size_t, const Eigen::VectorXd& x) {
        double q = 0.0;
        for (Eigen::Index i : y_indices) q += x[i] * x[i];
        const double r = std::pow(std::sqrt(q), bounds.exponent);
        const double v = field.value(x);
        const double slack = 1e-12 * (1.0 + std::abs(v));
        const double lower = bounds.c1 * r;
        const double upper = bounds.c2 * r;
        if (v < lower - slack || v > upper + slack)
            out.push_back({x, v, lower, upper});
    });
    return out;
}

}  // namespace stochlab
