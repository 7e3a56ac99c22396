#pragma once

#include "qsdlab/chain_model.hpp"
#include "qsdlab/philox.hpp"
#include "qsdlab/qprocess.hpp"
#include "qsdlab/spectral.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace qsd {

/// A path on [0, t_max], cut at absorption. visited_states[0] is the initial
/// state and visited_states[j + 1] the state entered at jump_times[j].
struct Trajectory {
    std::vector<double> jump_times;
    std::vector<std::size_t> visited_states;
    double absorption_time = std::numeric_limits<double>::infinity();
    double t_max = 0.0;

    bool absorbed() const { return absorption_time <= t_max; }

    /// int_0^{min(t_max, tau)} f(X_s) ds, summed piece by piece.
    double additive_integral(const Vector& f) const;

    /// State occupied at time t; t must be below the absorption time.
    std::size_t state_at(double t) const;
};

/// Jump probabilities of a (sub-)generator. Row x holds the cumulative
/// probabilities of moving to 0..n-1; the remaining mass is absorption.
class JumpTable {
public:
    explicit JumpTable(const Matrix& generator);

    std::size_t size() const { return rates_.size(); }
    double exit_rate(std::size_t x) const { return rates_[x]; }

    /// Next state for a uniform draw u, or size() for absorption.
    std::size_t next(std::size_t x, double u) const;

private:
    std::vector<double> rates_;
    std::vector<std::vector<double>> cumulative_;
};

/// Draws an index from a probability vector.
std::size_t sample_categorical(const Vector& law, double u);

Trajectory simulate_absorbed(const AbsorbedChain& chain, const Vector& mu, double t_max, PhiloxStream& rng);
Trajectory simulate_qprocess(const QProcessChain& q, const Vector& initial, double t_max, PhiloxStream& rng);

enum class ConditioningMethod { Automatic, Rejection, QProcess };

std::string to_string(ConditioningMethod method);
ConditioningMethod parse_method(const std::string& text);

/// Rejection below t = 3 / lambda0, Q-process surrogate above.
ConditioningMethod resolve_method(ConditioningMethod method, double lambda0, double t);

struct SamplingOptions {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    /// Upper limit on the expected number of absorbed-path simulations,
    /// n / P_mu(tau > t), accepted by the rejection method.
    double rejection_budget = 5e7;
    /// Accept sigma^2 = 0 (constant or cohomologous-to-constant f).
    bool allow_degenerate = false;
};

/// Sorted draws of sqrt(t) (S_t / t - beta(f)).
struct EmpiricalDistribution {
    std::vector<double> samples;
    std::size_t n_effective = 0;
    std::uint64_t seed = 0;
    std::uint64_t first_stream = 0;
    ConditioningMethod method = ConditioningMethod::QProcess;
    double t = 0.0;
    double sigma2 = 0.0;
    double beta_f = 0.0;
    /// Paths simulated in total (rejection) or n (Q-process).
    std::uint64_t attempts = 0;
    /// Q-process method: max over omega in [0, 3] of the exact distance
    /// between the conditional and surrogate characteristic functions of the
    /// statistic. Zero for the rejection method.
    double gap_bound = 0.0;
};

/// Replica i draws from Philox stream first_stream + i.
/// Throws BudgetExceeded and DegenerateVariance.
EmpiricalDistribution conditional_clt_sample(const AbsorbedChain& chain, const SpectralTriple& triple,
                                             const Vector& mu, const Vector& f, double t, std::size_t n_replicas,
                                             ConditioningMethod method, const SamplingOptions& options,
                                             std::uint64_t first_stream = 0);

/// Standard normal CDF.
double normal_cdf(double x);

/// sup_x |F_n(x) - Phi(x / sigma)|, evaluated on both sides of every jump of
/// the empirical CDF. The samples must be sorted.
double kolmogorov_distance(const std::vector<double>& sorted_samples, double sigma2);
double kolmogorov_distance(const EmpiricalDistribution& empirical, double sigma2);

struct QuasiErgodicRow {
    double t = 0.0;
    ConditioningMethod method = ConditioningMethod::QProcess;
    std::size_t n_effective = 0;
    double mean_square = 0.0;     // Monte Carlo E[(S_t / t - beta(f))^2 | tau > t]
    double standard_error = 0.0;
    double exact = 0.0;           // m_2(t) / t^2 of the centered f; NaN for n > 50
};

struct QuasiErgodicReport {
    std::vector<QuasiErgodicRow> rows;
    double fitted_slope = 0.0;        // from the Monte Carlo column
    double exact_fitted_slope = 0.0;  // from the exact column
};

/// Grid point j uses streams starting at j * 2^40.
QuasiErgodicReport quasi_ergodic_check(const AbsorbedChain& chain, const SpectralTriple& triple, const Vector& mu,
                                       const Vector& f, const std::vector<double>& t_grid, std::size_t n_replicas,
                                       ConditioningMethod method, const SamplingOptions& options);

}  // namespace qsd
