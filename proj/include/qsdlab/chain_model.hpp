#pragma once

#include "qsdlab/linalg.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qsd {

/// A continuous-time chain on a finite set E, killed at rate kappa(x) into a
/// cemetery state. The sub-generator L has nonnegative off-diagonal entries,
/// row sums -kappa(x) <= 0 and a strongly connected transition graph.
/// Immutable once built; construct through validate_chain or build_birth_death.
class AbsorbedChain {
public:
    std::size_t size() const { return static_cast<std::size_t>(generator_.rows()); }
    const Matrix& generator() const { return generator_; }
    const Vector& killing() const { return killing_; }
    const std::vector<std::string>& states() const { return states_; }

    /// Total exit rate -L(x,x), which includes the killing rate.
    double exit_rate(std::size_t x) const { return -generator_(x, x); }

private:
    friend AbsorbedChain validate_chain(const Matrix&, std::vector<std::string>);
    AbsorbedChain(Matrix generator, Vector killing, std::vector<std::string> states)
        : generator_(std::move(generator)), killing_(std::move(killing)), states_(std::move(states)) {}

    Matrix generator_;
    Vector killing_;
    std::vector<std::string> states_;
};

/// Checks the sub-generator invariants and computes the killing rates.
/// Labels default to "1".."n". Throws Error with kind NegativeOffDiagonal,
/// PositiveRowSum, NoKilling, Reducible or ValidationError.
AbsorbedChain validate_chain(const Matrix& raw, std::vector<std::string> states = {});

/// Birth-death chain on {1..n} absorbed at 0 through the death rate of state 1.
/// Requires death[0] > 0 and birth[n-1] == 0.
AbsorbedChain build_birth_death(std::size_t n, const std::vector<double>& birth,
                                const std::vector<double>& death);

/// Weight psi1 >= 1 used by the ergodicity estimate.
struct WeightFunction {
    Vector psi1;

    static WeightFunction ones(std::size_t n) { return {Vector::Ones(static_cast<Eigen::Index>(n))}; }
};

WeightFunction make_weight(const Vector& psi1);

/// Probability vector on E.
struct InitialLaw {
    Vector mu;

    static InitialLaw uniform(std::size_t n);
    static InitialLaw point_mass(std::size_t n, std::size_t x);
};

InitialLaw make_initial_law(const Vector& mu);

/// Everything a model file describes.
struct ModelBundle {
    AbsorbedChain chain;
    WeightFunction weight;
    InitialLaw initial;
    Vector observable;
};

namespace fixtures {

/// [[-2,1],[1,-2]]: lambda0 = 1, gamma = 2, alpha uniform, eta = 1.
AbsorbedChain m2sym();
/// [[-3,1],[2,-3]]: lambda0 = 3 - sqrt(2), gamma = 2 sqrt(2).
AbsorbedChain m2asym();
/// Birth-death chain on {1..5}, unit birth rates below 5 and unit death rates.
AbsorbedChain bd5();

/// Fixture bundle by name ("m2sym", "m2asym", "bd5"). The observable is
/// (1,-1) on the two-state fixtures and the indicator of state 1 on bd5.
std::optional<ModelBundle> bundle(std::string_view name);

}  // namespace fixtures

}  // namespace qsd
