#pragma once

#include "qsdlab/chain_model.hpp"

#include <random>

namespace qsd::testing {

// Irreducible sub-generator on n states: a directed cycle through every
// state plus sparse random edges, killing on a random subset that always
// contains state 0.
inline AbsorbedChain random_chain(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> rate(0.1, 2.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const auto m = static_cast<Eigen::Index>(n);
    Matrix L = Matrix::Zero(m, m);
    for (Eigen::Index x = 0; x < m; ++x) {
        L(x, (x + 1) % m) += rate(rng);
        for (Eigen::Index y = 0; y < m; ++y) {
            if (y != x && coin(rng) < 0.3) L(x, y) += rate(rng);
        }
    }
    for (Eigen::Index x = 0; x < m; ++x) {
        const double killing = (x == 0 || coin(rng) < 0.3) ? 0.5 * rate(rng) : 0.0;
        L(x, x) = -(L.row(x).sum() + killing);
    }
    return validate_chain(L);
}

// The 20 chains used by the property tests: sizes 5..15, fixed seed.
inline std::vector<AbsorbedChain> random_chain_set(std::size_t count = 20, std::uint64_t seed = 20240917) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size(5, 15);
    std::vector<AbsorbedChain> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(random_chain(rng, size(rng)));
    return out;
}

}  // namespace qsd::testing
