#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "stochlab/random.hpp"

namespace stochlab {

/// Uniform sampler over a box, with an optional projection (e.g. zero the
/// y-block to land on M, or normalize nu to the unit sphere) and an optional
/// acceptance predicate. Draws are deterministic given the seed.
struct RegionSampler {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    std::size_t n_samples = 1;
    std::uint64_t seed = 0;
    std::function<void(Eigen::VectorXd&)> project;
    std::function<bool(const Eigen::VectorXd&)> accept;

    void validate() const {
        if (lo.size() != hi.size() || lo.size() == 0)
            throw std::invalid_argument("RegionSampler: box bounds disagree");
        for (Eigen::Index i = 0; i < lo.size(); ++i)
            if (!(lo[i] <= hi[i])) throw std::invalid_argument("RegionSampler: lo > hi");
        if (n_samples < 1) throw std::invalid_argument("RegionSampler: n_samples must be >= 1");
    }

    template <class Fn>
    void for_each(std::size_t n, Fn&& fn) const {
        validate();
        auto engine = make_engine(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Eigen::VectorXd x(lo.size());
        std::size_t produced = 0;
        std::size_t attempts = 0;
        const std::size_t max_attempts = 1000 * (n + 1);
        while (produced < n) {
            if (++attempts > max_attempts)
                throw std::runtime_error("RegionSampler: acceptance predicate rejects too often");
            for (Eigen::Index i = 0; i < lo.size(); ++i)
                x[i] = lo[i] + (hi[i] - lo[i]) * unit(engine);
            if (project) project(x);
            if (accept && !accept(x)) continue;
            fn(produced, x);
            ++produced;
        }
    }

    template <class Fn>
    void for_each(Fn&& fn) const {
        for_each(n_samples, std::forward<Fn>(fn));
    }
};

/// Symmetric box [-r, r]^n.
inline RegionSampler make_box_sampler(Eigen::Index n, double r, std::size_t n_samples,
                                      std::uint64_t seed) {
    RegionSampler s;
    s.lo = Eigen::VectorXd::Constant(n, -r);
    s.hi = Eigen::VectorXd::Constant(n, r);
    s.n_samples = n_samples;
    s.seed = seed;
    return s;
}

/// Projection that zeroes the listed coordinates (used to sample on M).
inline std::function<void(Eigen::VectorXd&)> zero_coords_projection(
    std::vector<Eigen::Index> indices) {
    return [indices = std::move(indices)](Eigen::VectorXd& x) {
        for (Eigen::Index i : indices) x[i] = 0.0;
    };
}

}  // namespace stochlab
