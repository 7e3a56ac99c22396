#pragma once

#include "qsdlab/chain_model.hpp"
#include "qsdlab/qprocess.hpp"
#include "qsdlab/spectral.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace qsd {

/// Bounded observable |f| <= 1 together with its beta-centered version.
struct AdditiveObservable {
    Vector f;
    Vector centered;
    double beta_f = 0.0;
};

/// Centers f against beta. A constant f is centered to exactly zero.
AdditiveObservable make_observable(const Vector& f, const Vector& beta);

struct QuadratureResult {
    double value = 0.0;
    double truncation_bound = 0.0;      // tail beyond the horizon
    double discretization_bound = 0.0;  // composite Simpson error
    double horizon = 0.0;
    double step = 0.0;

    double error_bound() const { return truncation_bound + discretization_bound; }
};

struct VarianceResult {
    double sigma2 = 0.0;
    Vector poisson_solution;  // g with L_Q g = -f_centered, beta(g) = 0
    double quadrature_value = 0.0;
    double quadrature_error_bound = 0.0;
    double quadrature_truncation_bound = 0.0;
    double horizon = 0.0;
    double step = 0.0;
};

/// sigma^2 = 2 beta(f_centered g) with g the beta-centered solution of the
/// Poisson equation. Throws SingularSolve if L_Q is numerically reducible.
VarianceResult sigma2_poisson(const QProcessChain& q, const AdditiveObservable& f);

/// sigma^2 = 2 int_0^horizon Cov_beta(f(X_0), f(X_s)) ds by composite Simpson.
/// The truncation bound uses the ergodicity constant C; requires
/// horizon >= 10/gamma and step <= 0.01/gamma.
QuadratureResult sigma2_quadrature(const QProcessChain& q, const AdditiveObservable& f, double horizon,
                                   double step, double C);

/// Poisson solve cross-checked by quadrature over [0, 20/gamma] with step
/// min(0.01/gamma, 0.005/||L_Q||).
VarianceResult sigma2_with_oracle(const QProcessChain& q, const AdditiveObservable& f, double C);

/// Constants entering the moment bounds, evaluated from the certified C and gamma.
struct ConstantsTable {
    double C = 0.0;
    double gamma = 0.0;
    double c = 0.0;
    double beta_psi = 0.0;
    double C1 = 0.0;
    std::vector<double> D;   // D_1..D_K
    std::vector<double> Ck;  // C_1..C_K

    double even_moment_coefficient(std::size_t k) const;
    double odd_moment_coefficient(std::size_t k) const;
};

ConstantsTable constants_table(const ErgodicityCertificate& cert, const QProcessChain& q, std::size_t K);

/// Forward Feynman-Kac system: for j <= k_max, row j holds
///   y -> E_init[(int_0^t f(X_s) ds)^j 1{X_t = y, not absorbed}]
/// read from exp(tA), A block upper-bidiagonal with diagonal blocks
/// `generator` and superdiagonal blocks j diag(f).
std::vector<Vector> augmented_moments(const Matrix& generator, const Vector& initial, const Vector& f,
                                      std::size_t k_max, double t);

struct MomentValues {
    double t = 0.0;
    double survival = 1.0;           // P_mu(tau > t)
    std::vector<double> raw;         // E_mu[S_t^k 1{tau > t}]
    std::vector<double> conditional; // raw / survival
};

inline constexpr std::size_t kMaxMomentOrder = 8;

/// Moments of S_t = int_0^t f(X_s) ds for the absorbed chain, k <= 8.
MomentValues exact_conditional_moments(const AbsorbedChain& chain, const Vector& mu, const Vector& f,
                                       std::size_t k_max, double t);

/// Same under the Q-process started from `initial` (a law on E').
MomentValues q_moments(const QProcessChain& q, const Vector& initial, const Vector& f, std::size_t k_max,
                       double t);

struct MomentReport {
    std::size_t k = 0;
    std::vector<double> t_grid;
    std::vector<double> values;  // m_{2k}(t) / t^k
    double limit = 0.0;          // (2k)! sigma^{2k} / (k! 2^k)
    std::vector<double> errors;
    std::vector<double> bounds;  // (2k)! D_k C_1 k/(k-1)! mu(psi)/t, when constants are given
    double fitted_slope = 0.0;
    bool within_bound = true;
};

/// Even-moment convergence under the Q-process from mu. f is centered
/// internally. Bounds are filled in when `table` is non-null.
MomentReport check_even_moment_limit(const QProcessChain& q, const Vector& mu, const AdditiveObservable& f,
                                     double sigma2, std::size_t k, const std::vector<double>& t_grid,
                                     const ConstantsTable* table = nullptr);

/// Same quantity for the absorbed chain conditioned on survival up to t.
MomentReport check_even_moment_limit(const AbsorbedChain& chain, const Vector& mu, const AdditiveObservable& f,
                                     double sigma2, std::size_t k, const std::vector<double>& t_grid);

struct OddMomentReport {
    std::size_t k = 0;
    std::vector<double> t_grid;
    std::vector<double> values;  // m_{2k+1}(t) / t^{k+1/2}
    double fitted_slope = 0.0;
    double coefficient = 0.0;        // D_k [(2k+1)!/(2^k k!) + (2k+1)/(k-1)!]
    double fitted_prefactor = 0.0;   // smallest C-hat with |value| <= C-hat coefficient mu(psi)/sqrt(t)
};

OddMomentReport check_odd_moment_decay(const QProcessChain& q, const Vector& mu, const AdditiveObservable& f,
                                       std::size_t k, const std::vector<double>& t_grid,
                                       const ConstantsTable& table);

/// y -> E_init[exp(i omega' S_t) 1{X_t = y, not absorbed}].
ComplexVector charfun_weighted(const Matrix& generator, const Vector& initial, const Vector& f,
                               double omega_prime, double t);

/// E_mu[exp(i (omega/sqrt t) S_t) | tau > t].
std::complex<double> exact_conditional_charfun(const AbsorbedChain& chain, const Vector& mu, const Vector& f,
                                               double omega, double t);

/// E^Q_init[exp(i (omega/sqrt t) S_t)].
std::complex<double> q_charfun(const QProcessChain& q, const Vector& initial, const Vector& f, double omega,
                               double t);

/// sup over real g with |g| <= psi of |sum_y g(y) z(y)|. Exact: the optimum
/// is a sign pattern of psi, and only the patterns met while rotating z in the
/// complex plane need to be tried.
double sup_over_weighted_ball(const ComplexVector& z, const Vector& psi);

/// Extremal sign patterns +-psi (all of them for n <= 10) followed by random
/// profiles u psi with u uniform in [-1, 1].
std::vector<Vector> g_ball_samples(const Vector& psi, std::size_t random_profiles, std::uint64_t seed);

struct UniformCharfunRow {
    double t = 0.0;
    double coupling_sup = 0.0;          // exact sup over the psi-ball
    double coupling_sup_sampled = 0.0;  // max over the supplied test functions
    double bound = 0.0;                 // C mu(psi) e^{-gamma t} + C|omega|/sqrt(t) (beta(psi) + C mu(psi))/gamma
    double limit_sup = 0.0;             // sup_g |E[e^{..} g(X_t)] - beta(g) e^{-sigma^2 omega^2/2}|
    bool within_bound = false;
};

struct UniformCharfunReport {
    double omega = 0.0;
    std::vector<UniformCharfunRow> rows;
    bool limit_monotone = true;  // limit_sup nonincreasing up to 10%
};

UniformCharfunReport check_uniform_charfun_bound(const QProcessChain& q, const ErgodicityCertificate& cert,
                                                 const Vector& mu, const AdditiveObservable& f, double sigma2,
                                                 double omega, const std::vector<double>& t_grid,
                                                 const std::vector<Vector>& g_ball);

}  // namespace qsd
