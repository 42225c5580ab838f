#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "stochlab/field.hpp"
#include "stochlab/random.hpp"
#include "stochlab/sde.hpp"
#include "stochlab/stability.hpp"
#include "stochlab/stats.hpp"

namespace stochlab {

struct AllPathsBlewUpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EnsembleOptions {
    std::size_t n_checkpoints = 50;   // statistics recorded at C+1 grid times
    double tail_fraction = 0.2;       // trailing window of the limit surrogate
    double norm_ceiling = 1e3;        // empirical boundedness ceiling
    unsigned threads = 0;             // 0 = hardware concurrency
};

/// Per-time and per-path statistics over a Monte Carlo ensemble. Paths that
/// blow up are counted and excluded from the time statistics. All content is
/// a deterministic function of (model, sampler, config, options), whatever
/// the worker-thread count.
struct EnsembleSummary {
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double tail_fraction = 0.2;
    double norm_ceiling = 1e3;
    std::vector<Eigen::Index> y_indices;

    Eigen::VectorXd times;             // C+1 checkpoint times
    Eigen::MatrixXd y_norm;            // n_paths x (C+1)
    Eigen::MatrixXd V;                 // n_paths x (C+1)
    Eigen::VectorXd sup_y_norm;        // per path, over the full grid
    Eigen::VectorXd tail_mean_y;       // per path
    Eigen::MatrixXd tail_coord_mean;   // n_paths x n
    Eigen::MatrixXd tail_coord_std;    // n_paths x n
    Eigen::VectorXd v0;                // per path
    Eigen::VectorXd max_state_norm;    // per path
    std::vector<std::uint8_t> blown;   // per path
    std::size_t blowup_count = 0;
    bool ceiling_hit = false;

    Eigen::VectorXd mean_y_norm, q05_y_norm, q95_y_norm;  // over OK paths
    Eigen::VectorXd mean_V, se_V;

    std::size_t ok_paths() const { return n_paths - blowup_count; }
};

namespace detail {

inline std::vector<Eigen::Index> checkpoint_indices(Eigen::Index steps, std::size_t n_checkpoints) {
    std::vector<Eigen::Index> idx(n_checkpoints + 1);
    for (std::size_t c = 0; c <= n_checkpoints; ++c)
        idx[c] = static_cast<Eigen::Index>(
            std::llround(static_cast<double>(c) * static_cast<double>(steps) /
                         static_cast<double>(n_checkpoints)));
    return idx;
}

}  // namespace detail

/// Simulate n_paths independent paths (per-path noise stream seed ^ index)
/// and collect the stability-in-probability statistics. x0_sampler maps the
/// path index to its initial state.
inline EnsembleSummary run_ensemble(const SdeModel& model,
                                    const std::function<Eigen::VectorXd(std::uint64_t)>& x0_sampler,
                                    std::size_t n_paths, const IntegratorConfig& config,
                                    const ScalarField& field, EnsembleOptions options = {}) {
    if (n_paths < 1) throw std::invalid_argument("run_ensemble: n_paths must be >= 1");
    config.validate();
    model.validate();
    if (options.n_checkpoints < 1)
        throw std::invalid_argument("run_ensemble: need at least one checkpoint");
    if (!(options.tail_fraction > 0.0 && options.tail_fraction <= 1.0))
        throw std::invalid_argument("run_ensemble: tail_fraction must lie in (0, 1]");

    const Eigen::Index steps = config.steps();
    const Eigen::Index n = model.dim_state;
    const std::size_t C = options.n_checkpoints;
    const auto cp = detail::checkpoint_indices(steps, C);
    const Eigen::Index rows = steps + 1;
    const auto window =
        static_cast<Eigen::Index>(std::ceil(options.tail_fraction * static_cast<double>(rows)));
    const Eigen::Index tail_start = rows - window;

    EnsembleSummary s;
    s.n_paths = n_paths;
    s.seed = config.seed;
    s.tail_fraction = options.tail_fraction;
    s.norm_ceiling = options.norm_ceiling;
    s.y_indices = model.y_indices;
    s.times.resize(C + 1);
    for (std::size_t c = 0; c <= C; ++c)
        s.times[c] = static_cast<double>(cp[c]) * config.dt;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.y_norm = Eigen::MatrixXd::Constant(n_paths, C + 1, nan);
    s.V = Eigen::MatrixXd::Constant(n_paths, C + 1, nan);
    s.sup_y_norm = Eigen::VectorXd::Constant(n_paths, nan);
    s.tail_mean_y = Eigen::VectorXd::Constant(n_paths, nan);
    s.tail_coord_mean = Eigen::MatrixXd::Constant(n_paths, n, nan);
    s.tail_coord_std = Eigen::MatrixXd::Constant(n_paths, n, nan);
    s.v0 = Eigen::VectorXd::Constant(n_paths, nan);
    s.max_state_norm = Eigen::VectorXd::Constant(n_paths, nan);
    s.blown.assign(n_paths, 0);

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        const double sqrt_dt = std::sqrt(config.dt);
        Eigen::VectorXd tail_sum(n), tail_sumsq(n);
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_paths) return;
            try {
                auto engine = make_engine(path_stream(config.seed, i));
                std::normal_distribution<double> normal(0.0, 1.0);
                const Eigen::VectorXd x0 = x0_sampler(i);

                std::size_t c_next = 0;
                double sup_y = 0.0, tail_y = 0.0, max_norm = 0.0;
                tail_sum.setZero();
                tail_sumsq.setZero();
                s.v0[i] = field.value(x0);

                auto blow = detail::integrate_core(
                    model, x0, 0.0, config.dt, steps, config.scheme,
                    [&](Eigen::Index, Eigen::VectorXd& dw) {
                        for (Eigen::Index l = 0; l < dw.size(); ++l)
                            dw[l] = sqrt_dt * normal(engine);
                    },
                    [&](Eigen::Index j, double, const Eigen::VectorXd& x) {
                        const double yn = model.y_norm(x);
                        sup_y = std::max(sup_y, yn);
                        max_norm = std::max(max_norm, x.norm());
                        while (c_next <= C && cp[c_next] == j) {
                            s.y_norm(i, c_next) = yn;
                            s.V(i, c_next) = field.value(x);
                            ++c_next;
                        }
                        if (j >= tail_start) {
                            tail_y += yn;
                            tail_sum += x;
                            tail_sumsq += x.cwiseProduct(x);
                        }
                    });

                if (blow) {
                    s.blown[i] = 1;
                    continue;
                }
                s.sup_y_norm[i] = sup_y;
                s.max_state_norm[i] = max_norm;
                s.tail_mean_y[i] = tail_y / static_cast<double>(window);
                const Eigen::VectorXd m = tail_sum / static_cast<double>(window);
                s.tail_coord_mean.row(i) = m.transpose();
                s.tail_coord_std.row(i) =
                    (tail_sumsq / static_cast<double>(window) - m.cwiseProduct(m))
                        .cwiseMax(0.0)
                        .cwiseSqrt()
                        .transpose();
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    unsigned n_threads = options.threads ? options.threads : std::thread::hardware_concurrency();
    n_threads = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(n_paths)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    for (std::size_t i = 0; i < n_paths; ++i)
        if (s.blown[i]) ++s.blowup_count;
    if (s.blowup_count == n_paths)
        throw AllPathsBlewUpError("run_ensemble: every path blew up");

    for (std::size_t i = 0; i < n_paths; ++i)
        if (!s.blown[i] && s.max_state_norm[i] > options.norm_ceiling) s.ceiling_hit = true;

    const auto n_ok = static_cast<double>(s.ok_paths());
    s.mean_y_norm.resize(C + 1);
    s.q05_y_norm.resize(C + 1);
    s.q95_y_norm.resize(C + 1);
    s.mean_V.resize(C + 1);
    s.se_V.resize(C + 1);
    std::vector<double> column;
    column.reserve(s.ok_paths());
    for (std::size_t c = 0; c <= C; ++c) {
        double sum_y = 0.0, sum_v = 0.0;
        column.clear();
        for (std::size_t i = 0; i < n_paths; ++i) {
            if (s.blown[i]) continue;
            sum_y += s.y_norm(i, c);
            sum_v += s.V(i, c);
            column.push_back(s.y_norm(i, c));
        }
        s.mean_y_norm[c] = sum_y / n_ok;
        s.mean_V[c] = sum_v / n_ok;
        s.q05_y_norm[c] = quantile(column, 0.05);
        s.q95_y_norm[c] = quantile(column, 0.95);
        double ss = 0.0;
        for (std::size_t i = 0; i < n_paths; ++i) {
            if (s.blown[i]) continue;
            const double d = s.V(i, c) - s.mean_V[c];
            ss += d * d;
        }
        s.se_V[c] = (s.ok_paths() > 1) ? std::sqrt(ss / (n_ok - 1.0)) / std::sqrt(n_ok) : 0.0;
    }
    return s;
}

struct EstimateResult {
    double p_hat = 0.0;
    Interval ci95;
    std::size_t count = 0;
    std::size_t n = 0;
};

/// Fraction of paths whose running sup of ||y|| over the grid exceeds eps1
/// (an under-estimate of the continuous-time sup), with a Wilson 95% CI.
/// Blown-up paths count as exceeders.
inline EstimateResult estimate_exceedance(const EnsembleSummary& summary, double eps1) {
    if (!(eps1 >= 0.0)) throw std::invalid_argument("estimate_exceedance: eps1 must be >= 0");
    EstimateResult r;
    r.n = summary.n_paths;
    for (std::size_t i = 0; i < summary.n_paths; ++i)
        if (summary.blown[i] || summary.sup_y_norm[i] > eps1) ++r.count;
    r.p_hat = static_cast<double>(r.count) / static_cast<double>(r.n);
    r.ci95 = wilson_interval(r.count, r.n);
    return r;
}

inline EstimateResult estimate_exceedance(const std::vector<SamplePath>& paths,
                                          const std::vector<Eigen::Index>& y_indices, double eps1) {
    if (paths.empty()) throw std::invalid_argument("estimate_exceedance: no paths");
    if (!(eps1 >= 0.0)) throw std::invalid_argument("estimate_exceedance: eps1 must be >= 0");
    EstimateResult r;
    r.n = paths.size();
    for (const auto& path : paths) {
        double sup = 0.0;
        for (Eigen::Index j = 0; j < path.states.rows(); ++j) {
            double q = 0.0;
            for (Eigen::Index i : y_indices) q += path.states(j, i) * path.states(j, i);
            sup = std::max(sup, std::sqrt(q));
        }
        if (sup > eps1) ++r.count;
    }
    r.p_hat = static_cast<double>(r.count) / static_cast<double>(r.n);
    r.ci95 = wilson_interval(r.count, r.n);
    return r;
}

/// Tail-window surrogate of the limit event of asymptotic stability: the
/// fraction of paths whose trailing-window mean of ||y|| falls below the
/// threshold. Blown-up paths count as non-converged.
inline EstimateResult estimate_convergence(const EnsembleSummary& summary, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("estimate_convergence: threshold must be > 0");
    EstimateResult r;
    r.n = summary.n_paths;
    for (std::size_t i = 0; i < summary.n_paths; ++i)
        if (!summary.blown[i] && summary.tail_mean_y[i] < threshold) ++r.count;
    r.p_hat = static_cast<double>(r.count) / static_cast<double>(r.n);
    r.ci95 = wilson_interval(r.count, r.n);
    return r;
}

inline EstimateResult estimate_convergence(const std::vector<SamplePath>& paths,
                                           const std::vector<Eigen::Index>& y_indices,
                                           double threshold, double tail_fraction) {
    if (paths.empty()) throw std::invalid_argument("estimate_convergence: no paths");
    if (!(threshold > 0.0)) throw std::invalid_argument("estimate_convergence: threshold must be > 0");
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw std::invalid_argument("estimate_convergence: tail_fraction must lie in (0, 1]");
    EstimateResult r;
    r.n = paths.size();
    for (const auto& path : paths) {
        const Eigen::Index rows = path.states.rows();
        const auto window =
            static_cast<Eigen::Index>(std::ceil(tail_fraction * static_cast<double>(rows)));
        double acc = 0.0;
        for (Eigen::Index j = rows - window; j < rows; ++j) {
            double q = 0.0;
            for (Eigen::Index i : y_indices) q += path.states(j, i) * path.states(j, i);
            acc += std::sqrt(q);
        }
        if (acc / static_cast<double>(window) < threshold) ++r.count;
    }
    r.p_hat = static_cast<double>(r.count) / static_cast<double>(r.n);
    r.ci95 = wilson_interval(r.count, r.n);
    return r;
}

/// Statistical test of the Dynkin supermartingale property: the empirical
/// mean of V must not exceed its initial value, nor increase across
/// successive checkpoints, beyond z_(1-alpha) standard errors of the paired
/// differences (plus abs_tol, an integrator-error floor). The worst_state of
/// the report holds the two checkpoint times of the worst comparison.
inline ViolationReport supermartingale_check(const EnsembleSummary& summary, double alpha,
                                             double abs_tol = 0.0) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("supermartingale_check: alpha must lie in (0, 1)");
    const double z = normal_quantile(1.0 - alpha);
    const auto C = static_cast<std::size_t>(summary.times.size()) - 1;
    ViolationReport report;
    report.tolerance = abs_tol;

    auto paired_excess = [&](std::size_t c_from, std::size_t c_to) {
        double sum = 0.0, n_ok = 0.0;
        for (std::size_t i = 0; i < summary.n_paths; ++i) {
            if (summary.blown[i]) continue;
            sum += summary.V(i, c_to) - summary.V(i, c_from);
            n_ok += 1.0;
        }
        const double mean = sum / n_ok;
        double ss = 0.0;
        for (std::size_t i = 0; i < summary.n_paths; ++i) {
            if (summary.blown[i]) continue;
            const double d = summary.V(i, c_to) - summary.V(i, c_from) - mean;
            ss += d * d;
        }
        const double se = (n_ok > 1.0) ? std::sqrt(ss / (n_ok - 1.0)) / std::sqrt(n_ok) : 0.0;
        return mean - z * se - abs_tol;
    };

    for (std::size_t c = 1; c <= C; ++c) {
        for (std::size_t c_from : {std::size_t{0}, c - 1}) {
            if (c_from == c) continue;
            const double excess = paired_excess(c_from, c);
            if (excess > report.worst_value) {
                report.worst_value = excess;
                report.worst_state = Eigen::Vector2d(summary.times[c_from], summary.times[c]);
            }
            if (excess > 0.0) ++report.count;
        }
    }
    return report;
}

/// Largest single-step increase of V along a stored path. Nonpositive up to
/// integrator error for sigma = 0 closed-loop trajectories with L V <= 0.
inline double max_pathwise_v_increase(const SamplePath& path, const ScalarField& field) {
    double worst = -std::numeric_limits<double>::infinity();
    double prev = field.value(path.states.row(0).transpose());
    for (Eigen::Index j = 1; j < path.states.rows(); ++j) {
        const double cur = field.value(path.states.row(j).transpose());
        worst = std::max(worst, cur - prev);
        prev = cur;
    }
    return worst;
}

}  // namespace stochlab
