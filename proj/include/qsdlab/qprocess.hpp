#pragma once

#include "qsdlab/chain_model.hpp"
#include "qsdlab/spectral.hpp"

#include <vector>

namespace qsd {

/// The chain conditioned never to be absorbed: the Doob transform of L by eta,
///   L_Q(x,y) = eta(y) L(x,y) / eta(x)  (x != y),  rows summing to zero,
/// with invariant law beta = eta * alpha and weight psi = psi1 / eta.
struct QProcessChain {
    std::vector<std::size_t> support;
    Matrix generator;
    Vector beta;
    Vector psi;
    double c = 0.0;  // min psi
    // Carried over from the absorbed chain.
    Vector eta;
    Vector alpha;
    Vector psi1;
    double lambda0 = 0.0;
    double gamma = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(generator.rows()); }
};

/// Throws ZeroEta if some eta(x) is not positive.
QProcessChain h_transform(const AbsorbedChain& chain, const SpectralTriple& triple,
                          const WeightFunction& psi1);
QProcessChain h_transform(const AbsorbedChain& chain, const SpectralTriple& triple);

/// The law eta o mu (dx) = eta(x) mu(dx) / mu(eta).
Vector eta_reweighted(const Vector& mu, const Vector& eta);

/// initial^T exp(t L_Q).
Vector q_marginal(const QProcessChain& q, const Vector& initial, double t);

struct QErgodicityRow {
    double t = 0.0;
    double worst_deviation = 0.0;  // max_x ||delta_x Q_t - beta||_psi / psi(x)
    double implied_C = 0.0;        // worst_deviation * e^{gamma t}
    double worst_tv = 0.0;         // max_x sum|delta_x Q_t - beta| eta(x) / (||eta||_{L^inf(psi1)} psi1(x))
    double tv_implied_C = 0.0;
};

struct QErgodicityReport {
    std::vector<QErgodicityRow> rows;
    double fitted_rate = 0.0;  // -slope of log(worst_deviation) against t, over t > 0
};

QErgodicityReport check_q_ergodicity(const QProcessChain& q, const std::vector<double>& t_grid);

/// Law of X_t under P_mu( . | tau > T), for t <= T:
///   x -> [mu^T P_t](x) [P_{T-t} 1](x) / mu^T P_T 1.
Vector conditional_marginal(const AbsorbedChain& chain, const Vector& mu, double t, double T);

/// Distance between P_mu(X_t in . | tau > T) and Q_{eta o mu}(X_t in .).
///
/// tv_gap uses the (1/2) sum |.| convention and l1_gap the sum |.| one.
/// The prefactor C' of C' (mu(psi1)/mu(eta)) e^{-gamma (T-t)} is not known in
/// closed form; it is fitted as the smallest value dominating the sweep of
/// horizons, and fitted_rate is -slope of log tv_gap against T - t.
struct ConditionalGapReport {
    double t = 0.0;
    double T = 0.0;
    double tv_gap = 0.0;
    double l1_gap = 0.0;
    double bound = 0.0;
    double prefactor = 0.0;
    double fitted_rate = 0.0;
    double threshold = 0.0;  // (1/gamma) log(2 C mu(psi1) / mu(eta))
    bool threshold_ok = false;
};

struct ConditionalGapSweep {
    std::vector<ConditionalGapReport> rows;
    double fitted_rate = 0.0;
    double prefactor = 0.0;
};

/// One report per horizon T = t + s, s in horizon_offsets (all >= 0).
ConditionalGapSweep sweep_conditional_gap(const AbsorbedChain& chain, const SpectralTriple& triple,
                                          const ErgodicityCertificate& cert, const Vector& mu, double t,
                                          const std::vector<double>& horizon_offsets);

/// Report at (t, T); the fit uses the six horizons t + j (T - t) / 6.
ConditionalGapReport conditional_vs_q_gap(const AbsorbedChain& chain, const SpectralTriple& triple,
                                          const ErgodicityCertificate& cert, const Vector& mu, double t,
                                          double T);

/// True when beta(x) L_Q(x,y) = beta(y) L_Q(y,x) within tol.
bool is_reversible(const QProcessChain& q, double tol = 1e-12);

}  // namespace qsd
