#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace stochlab {

/// SplitMix64 finalizer. Used to whiten stream ids before seeding an engine,
/// so that nearby ids (seed ^ 0, seed ^ 1, ...) yield unrelated streams.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Combine a base seed with up to two stream indices into a new stream id.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(seed ^ splitmix64(a ^ splitmix64(b)));
}

/// Deterministic engine for a given stream id.
inline std::mt19937_64 make_engine(std::uint64_t stream_id) {
    return std::mt19937_64(splitmix64(stream_id));
}

/// Stream id of path `index` within an ensemble keyed by `seed`.
/// The xor derivation makes per-path streams independent of execution order.
inline std::uint64_t path_stream(std::uint64_t seed, std::uint64_t index) {
    return seed ^ index;
}

/// Wiener increments for a k-dimensional driving process over `steps` steps
/// of size dt. Entry (j, l) is the increment of w_l over step j, drawn
/// i.i.d. from Normal(0, dt). Draws are generated step-major: all k values
/// of step 0, then step 1, and so on. Deterministic given the seed.
inline Eigen::MatrixXd wiener_increments(Eigen::Index k, Eigen::Index steps,
                                         double dt, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("wiener_increments: k must be >= 1");
    if (steps < 1) throw std::invalid_argument("wiener_increments: steps must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("wiener_increments: dt must be positive");

    auto engine = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sqrt_dt = std::sqrt(dt);

    Eigen::MatrixXd dw(steps, k);
    for (Eigen::Index j = 0; j < steps; ++j)
        for (Eigen::Index l = 0; l < k; ++l)
            dw(j, l) = sqrt_dt * normal(engine);
    return dw;
}

}  // namespace stochlab
