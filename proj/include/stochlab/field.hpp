#pragma once

#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

namespace stochlab {

/// Twice-differentiable scalar function with analytic value, gradient and
/// Hessian evaluators. Evaluators are pure and thread-safe.
struct ScalarField {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> gradient;
    std::function<void(const Eigen::VectorXd&, Eigen::MatrixXd&)> hessian;

    double value_at(const Eigen::VectorXd& x) const { return value(x); }

    Eigen::VectorXd gradient_at(const Eigen::VectorXd& x) const {
        Eigen::VectorXd g(x.size());
        gradient(x, g);
        return g;
    }

    Eigen::MatrixXd hessian_at(const Eigen::VectorXd& x) const {
        Eigen::MatrixXd h(x.size(), x.size());
        hessian(x, h);
        return h;
    }
};

/// 1/2 sum_i w_i x_i^2 with exact derivatives.
inline ScalarField make_diag_quadratic_field(const Eigen::VectorXd& weights) {
    ScalarField f;
    f.value = [weights](const Eigen::VectorXd& x) {
        if (x.size() != weights.size())
            throw std::invalid_argument("quadratic field: dimension mismatch");
        return 0.5 * weights.cwiseProduct(x).dot(x);
    };
    f.gradient = [weights](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = weights.cwiseProduct(x);
    };
    f.hessian = [weights](const Eigen::VectorXd& x, Eigen::MatrixXd& h) {
        h.setZero(x.size(), x.size());
        h.diagonal() = weights;
    };
    return f;
}

/// a*U + b*V as a new field.
inline ScalarField combine_fields(double a, const ScalarField& u, double b, const ScalarField& v) {
    ScalarField f;
    f.value = [=](const Eigen::VectorXd& x) { return a * u.value(x) + b * v.value(x); };
    f.gradient = [=](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        Eigen::VectorXd tmp(x.size());
        u.gradient(x, g);
        v.gradient(x, tmp);
        g = a * g + b * tmp;
    };
    f.hessian = [=](const Eigen::VectorXd& x, Eigen::MatrixXd& h) {
        Eigen::MatrixXd tmp(x.size(), x.size());
        u.hessian(x, h);
        v.hessian(x, tmp);
        h = a * h + b * tmp;
    };
    return f;
}

}  // namespace stochlab
