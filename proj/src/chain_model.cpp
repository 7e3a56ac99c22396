#include "qsdlab/chain_model.hpp"

#include "qsdlab/error.hpp"

#include <cmath>
#include <deque>
#include <sstream>

namespace qsd {

namespace {

// Breadth-first reachability over the positive off-diagonal entries.
std::vector<bool> reachable_from(const Matrix& l, std::size_t start, bool reverse) {
    const auto n = static_cast<std::size_t>(l.rows());
    std::vector<bool> seen(n, false);
    std::deque<std::size_t> queue{start};
    seen[start] = true;
    while (!queue.empty()) {
        const std::size_t x = queue.front();
        queue.pop_front();
        for (std::size_t y = 0; y < n; ++y) {
            if (seen[y] || y == x) continue;
            const double rate = reverse ? l(y, x) : l(x, y);
            if (rate > 0.0) {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    return seen;
}

std::string label(const std::vector<std::string>& states, std::size_t i) { return states.at(i); }

}  // namespace

AbsorbedChain validate_chain(const Matrix& raw, std::vector<std::string> states) {
    if (raw.rows() == 0 || raw.rows() != raw.cols()) {
        throw Error(ErrorKind::ValidationError, "generator must be a nonempty square matrix");
    }
    if (!raw.allFinite()) {
        throw Error(ErrorKind::ValidationError, "generator has non-finite entries");
    }
    const auto n = static_cast<std::size_t>(raw.rows());
    if (states.empty()) {
        for (std::size_t i = 0; i < n; ++i) states.push_back(std::to_string(i + 1));
    }
    if (states.size() != n) {
        throw Error(ErrorKind::ValidationError, "expected " + std::to_string(n) + " state labels, got " +
                                                    std::to_string(states.size()));
    }

    Vector killing(static_cast<Eigen::Index>(n));
    for (std::size_t x = 0; x < n; ++x) {
        double row_sum = 0.0;
        double row_abs = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            const double v = raw(x, y);
            if (x != y && v < 0.0) {
                std::ostringstream msg;
                msg << "L(" << label(states, x) << "," << label(states, y) << ") = " << v << " < 0";
                throw Error(ErrorKind::NegativeOffDiagonal, msg.str());
            }
            row_sum += v;
            row_abs += std::abs(v);
        }
        const double tol = 1e-12 * row_abs;
        if (row_sum > tol) {
            std::ostringstream msg;
            msg << "row " << label(states, x) << " sums to " << row_sum << " > 0";
            throw Error(ErrorKind::PositiveRowSum, msg.str());
        }
        killing(static_cast<Eigen::Index>(x)) = row_sum < -tol ? -row_sum : 0.0;
    }
    if (killing.maxCoeff() <= 0.0) {
        throw Error(ErrorKind::NoKilling, "every row sums to zero: the chain is never absorbed");
    }

    const auto forward = reachable_from(raw, 0, false);
    const auto backward = reachable_from(raw, 0, true);
    for (std::size_t y = 0; y < n; ++y) {
        if (!forward[y]) {
            throw Error(ErrorKind::Reducible,
                        "state " + label(states, y) + " is not reachable from state " + label(states, 0));
        }
        if (!backward[y]) {
            throw Error(ErrorKind::Reducible,
                        "state " + label(states, 0) + " is not reachable from state " + label(states, y));
        }
    }
    return AbsorbedChain(raw, std::move(killing), std::move(states));
}

AbsorbedChain build_birth_death(std::size_t n, const std::vector<double>& birth,
                                const std::vector<double>& death) {
    if (n == 0 || birth.size() != n || death.size() != n) {
        throw Error(ErrorKind::InvalidRates, "birth and death must both have length n >= 1");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(birth[i]) || !std::isfinite(death[i]) || birth[i] < 0.0 || death[i] < 0.0) {
            throw Error(ErrorKind::InvalidRates, "rates must be finite and nonnegative (state " +
                                                     std::to_string(i + 1) + ")");
        }
    }
    if (!(death[0] > 0.0)) {
        throw Error(ErrorKind::InvalidRates, "death rate of state 1 must be positive");
    }
    if (birth[n - 1] != 0.0) {
        throw Error(ErrorKind::InvalidRates, "birth rate of the top state must be zero");
    }
    Matrix l = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        if (i + 1 < n) l(r, r + 1) = birth[i];
        if (i > 0) l(r, r - 1) = death[i];
        l(r, r) = -(birth[i] + death[i]);
    }
    return validate_chain(l);
}

WeightFunction make_weight(const Vector& psi1) {
    for (Eigen::Index i = 0; i < psi1.size(); ++i) {
        if (!std::isfinite(psi1(i)) || psi1(i) < 1.0) {
            throw Error(ErrorKind::ValidationError,
                        "psi1 must be finite and >= 1 (entry " + std::to_string(i + 1) + ")");
        }
    }
    return {psi1};
}

InitialLaw InitialLaw::uniform(std::size_t n) {
    const auto size = static_cast<Eigen::Index>(n);
    return {Vector::Constant(size, 1.0 / static_cast<double>(n))};
}

InitialLaw InitialLaw::point_mass(std::size_t n, std::size_t x) {
    Vector mu = Vector::Zero(static_cast<Eigen::Index>(n));
    mu(static_cast<Eigen::Index>(x)) = 1.0;
    return {mu};
}

InitialLaw make_initial_law(const Vector& mu) {
    if (mu.size() == 0 || !mu.allFinite() || mu.minCoeff() < 0.0) {
        throw Error(ErrorKind::ValidationError, "initial law must be a finite nonnegative vector");
    }
    if (std::abs(mu.sum() - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "initial law sums to " << mu.sum() << ", expected 1";
        throw Error(ErrorKind::ValidationError, msg.str());
    }
    return {mu};
}

namespace fixtures {

AbsorbedChain m2sym() {
    Matrix l(2, 2);
    l << -2.0, 1.0, 1.0, -2.0;
    return validate_chain(l);
}

AbsorbedChain m2asym() {
    Matrix l(2, 2);
    l << -3.0, 1.0, 2.0, -3.0;
    return validate_chain(l);
}

AbsorbedChain bd5() {
    return build_birth_death(5, {1.0, 1.0, 1.0, 1.0, 0.0}, {1.0, 1.0, 1.0, 1.0, 1.0});
}

std::optional<ModelBundle> bundle(std::string_view name) {
    std::optional<AbsorbedChain> chain;
    Vector f;
    if (name == "m2sym") {
        chain = m2sym();
        f = Vector{{1.0, -1.0}};
    } else if (name == "m2asym") {
        chain = m2asym();
        f = Vector{{1.0, -1.0}};
    } else if (name == "bd5") {
        chain = bd5();
        f = Vector::Zero(5);
        f(0) = 1.0;
    } else {
        return std::nullopt;
    }
    const std::size_t n = chain->size();
    return ModelBundle{*chain, WeightFunction::ones(n), InitialLaw::uniform(n), f};
}

}  // namespace fixtures

}  // namespace qsd
