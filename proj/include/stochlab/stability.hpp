#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

#include "stochlab/generator.hpp"
#include "stochlab/sampling.hpp"
#include "stochlab/sde.hpp"

namespace stochlab {

/// Result of a scan over sampled states. count > 0 iff some sample exceeded
/// the tolerance; worst_value/worst_state track the largest value seen (ties
/// resolved toward the lowest sample index by strict comparison).
struct ViolationReport {
    double worst_value = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd worst_state;
    std::size_t count = 0;
    double tolerance = 0.0;

    bool empty() const { return count == 0; }
};

/// Flags sampled states where fn(x) > tol.
inline ViolationReport scan_sign(const std::function<double(const Eigen::VectorXd&)>& fn,
                                 const RegionSampler& sampler, double tol) {
    if (!(tol >= 0.0)) throw std::invalid_argument("scan_sign: tolerance must be >= 0");
    ViolationReport report;
    report.tolerance = tol;
    sampler.for_each([&](std::size_t, const Eigen::VectorXd& x) {
        const double v = fn(x);
        if (v > report.worst_value) {
            report.worst_value = v;
            report.worst_state = x;
        }
        if (v > tol) ++report.count;
    });
    return report;
}

/// Flags sampled states where L V, evaluated through the generator, is
/// positive beyond tol.
inline ViolationReport scan_generator_sign(const SdeModel& model, const ScalarField& field,
                                           const RegionSampler& sampler, double tol) {
    return scan_sign([&](const Eigen::VectorXd& x) { return apply_generator(model, field, x); },
                     sampler, tol);
}

/// First-order tangency check on M: on sampled states (the sampler must
/// project onto M), every y-component of the drift and every entry of the
/// y-rows of the diffusion has to stay within tol in magnitude. For the
/// closed-loop models the residual is exactly zero, not merely small.
inline ViolationReport tangency_check(const SdeModel& model, const RegionSampler& sampler,
                                      double tol) {
    if (!(tol >= 0.0)) throw std::invalid_argument("tangency_check: tolerance must be >= 0");
    ViolationReport report;
    report.tolerance = tol;
    Eigen::VectorXd f(model.dim_state);
    Eigen::MatrixXd s(model.dim_state, model.dim_noise);
    sampler.for_each([&](std::size_t, const Eigen::VectorXd& x) {
        model.drift(x, f);
        model.diffusion(x, s);
        double resid = 0.0;
        for (Eigen::Index i : model.y_indices) {
            resid = std::max(resid, std::abs(f[i]));
            for (Eigen::Index l = 0; l < model.dim_noise; ++l)
                resid = std::max(resid, std::abs(s(i, l)));
        }
        if (resid > report.worst_value) {
            report.worst_value = resid;
            report.worst_state = x;
        }
        if (resid > tol) ++report.count;
    });
    return report;
}

/// Norm of the constraint residuals that a state of the zero set {L V = 0}
/// must satisfy to stay there. Positive anywhere on M_v \ M certifies that
/// the set is not forward invariant; vanishes exactly on M.
inline double stationarity_defect(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& mv_residual,
    const Eigen::VectorXd& x) {
    return mv_residual(x).norm();
}

struct ConservedDrift {
    double max_abs_dev = 0.0;
    double final_dev = 0.0;
};

/// Deviation of quantity(x_t) from quantity(x_0) along a stored path.
inline ConservedDrift conserved_drift(const SamplePath& path,
                                      const std::function<double(const Eigen::VectorXd&)>& quantity) {
    ConservedDrift out;
    const double q0 = quantity(path.states.row(0).transpose());
    for (Eigen::Index j = 0; j <= path.steps(); ++j) {
        const double dev = quantity(path.states.row(j).transpose()) - q0;
        out.max_abs_dev = std::max(out.max_abs_dev, std::abs(dev));
        if (j == path.steps()) out.final_dev = dev;
    }
    return out;
}

struct TailStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
};

/// Per-coordinate mean and standard deviation over the trailing window of a
/// path. Small tail stddev of a coordinate indicates it settled to a limit;
/// small tail mean of the y-components indicates convergence toward M.
inline TailStats limit_probe(const SamplePath& path, double tail_fraction) {
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw std::invalid_argument("limit_probe: tail_fraction must lie in (0, 1]");
    const Eigen::Index rows = path.states.rows();
    const auto window = static_cast<Eigen::Index>(std::ceil(tail_fraction * static_cast<double>(rows)));
    const Eigen::Index start = rows - window;
    TailStats out;
    out.mean = path.states.bottomRows(window).colwise().mean().transpose();
    Eigen::MatrixXd centered =
        path.states.bottomRows(window).rowwise() - out.mean.transpose();
    out.stddev = (centered.array().square().colwise().sum() / static_cast<double>(window))
                     .sqrt()
                     .transpose();
    return out;
}

}  // namespace stochlab
