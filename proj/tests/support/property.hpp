#pragma once

#include "support/instances.hpp"

#include <doctest.h>

#include <cstdint>

namespace fairshift::testing {

/// Run `body(rng)` for `trials` independent streams; a failing trial reports its stream index.
template <typename Body>
void for_all(int trials, std::uint64_t seed, Body&& body) {
    for (int k = 0; k < trials; ++k) {
        Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(k));
        CAPTURE(k);
        body(rng);
    }
}

/// Random small shape: bins in [1, max_bins], groups in [2, max_groups].
struct Shape {
    Eigen::Index bins;
    Eigen::Index groups;
};

inline Shape random_shape(Rng& rng, int max_bins = 6, int max_groups = 3) {
    return {uniform_int(rng, 1, max_bins), uniform_int(rng, 2, max_groups)};
}

inline bool is_probability_table(const EmpiricalDistribution& d) {
    double total = 0.0;
    for (Eigen::Index g = 0; g < d.num_groups(); ++g) {
        if ((d.joint(g).array() < 0.0).any()) return false;
        total += d.joint(g).sum();
    }
    return std::abs(total - 1.0) <= 1e-12;
}

} // namespace fairshift::testing
