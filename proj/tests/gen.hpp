#pragma once

// Hand-rolled generators for property tests. Every generator takes the
// engine by reference so a failing case replays from its seed.

#include <random>
#include <vector>

#include "lipreach/geometry.hpp"
#include "lipreach/kernel.hpp"

namespace gen {

using Rng = std::mt19937_64;

inline double uniform(Rng& r, double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<>(lo, hi)(r); }
inline int integer(Rng& r, int lo, int hi) { return std::uniform_int_distribution<>(lo, hi)(r); }

inline std::vector<double> point(Rng& r, std::size_t d, double lo = 0.0, double hi = 1.0) {
    std::vector<double> x(d);
    for (auto& v : x) v = uniform(r, lo, hi);
    return x;
}

/// Box inside [lo, hi]^d; each axis is degenerate with probability p_flat.
inline lipreach::Box box(Rng& r, std::size_t d, double lo = 0.0, double hi = 1.0, double p_flat = 0.0) {
    lipreach::Box b{std::vector<double>(d), std::vector<double>(d)};
    for (std::size_t j = 0; j < d; ++j) {
        double a = uniform(r, lo, hi), c = uniform(r, lo, hi);
        if (uniform(r) < p_flat) c = a;
        b.lo[j] = std::min(a, c);
        b.hi[j] = std::max(a, c);
    }
    return b;
}

/// Mixture of up to three atoms and two clipped boxes on [0,1]^d, tag 0.
inline lipreach::TransitionKernel kernel(Rng& r, std::size_t d) {
    using namespace lipreach;
    const Box space{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
    std::vector<std::pair<double, TransitionKernel>> parts;
    int atoms = integer(r, 0, 3), boxes = integer(r, atoms == 0 ? 1 : 0, 2);
    for (int i = 0; i < atoms; ++i) parts.emplace_back(uniform(r, 0.1, 1.0), TransitionKernel::dirac({point(r, d), 0}));
    for (int i = 0; i < boxes; ++i) {
        auto c = point(r, d);
        double w = uniform(r, 0.01, 0.4);
        Box raw{c, c};
        for (std::size_t j = 0; j < d; ++j) {
            raw.lo[j] -= w;
            raw.hi[j] += w;
        }
        parts.emplace_back(uniform(r, 0.1, 1.0), TransitionKernel::clipped_uniform(0, raw, space));
    }
    double total = 0;
    for (auto& [w, k] : parts) total += w;
    for (auto& [w, k] : parts) w /= total;
    return TransitionKernel::mixture(parts);
}

}  // namespace gen
