#pragma once

#include "qsdlab/chain_model.hpp"

#include <vector>

namespace qsd {

/// Leading eigen-objects of the sub-generator L.
///
/// alpha is the quasi-stationary distribution (alpha^T L = -lambda0 alpha^T,
/// sum alpha = 1), eta the right eigenfunction (L eta = -lambda0 eta) scaled
/// so that alpha(eta) = 1, and gamma the distance between -lambda0 and the
/// next largest real part in the spectrum of L. A single-state chain has no
/// subleading spectrum and gets gamma = +inf.
struct SpectralTriple {
    double lambda0 = 0.0;
    Vector alpha;
    Vector eta;
    double gamma = 0.0;
    // Infinity-norm residuals of the two eigen-relations.
    double left_residual = 0.0;
    double right_residual = 0.0;
};

struct SpectralOptions {
    /// Largest n solved by dense eigen-decomposition; larger chains use
    /// power iteration on the uniformized matrix with deflation.
    std::size_t dense_limit = 2000;
    std::size_t max_power_iterations = 200000;
    double power_tolerance = 1e-13;
};

/// Throws DegenerateGap if gamma < 1e-8 lambda0 and NoKilling if lambda0 is
/// not positive.
SpectralTriple solve_spectral(const AbsorbedChain& chain, const SpectralOptions& options = {});

/// sup over |f| <= psi of |m(f)|, i.e. sum_x |m(x)| psi(x).
double weighted_norm(const Vector& signed_measure, const Vector& psi);

/// exp(tL), the sub-Markov semigroup P_t.
Matrix semigroup(const AbsorbedChain& chain, double t);

/// Grid-based estimate of the constants in
///   || e^{lambda0 t} delta_x P_t - eta(x) alpha ||_{psi1} <= C psi1(x) e^{-gamma t}.
///
/// worst_ratio is the largest value of e^{gamma t} ||...||_{psi1} / psi1(x)
/// over x and the grid; C = slack * worst_ratio. The bound is checked only on
/// the grid. t = 0 is always part of the grid. horizon_ok records whether the
/// grid reaches 5 / gamma.
struct ErgodicityCertificate {
    double C = 0.0;
    double gamma = 0.0;
    WeightFunction psi1;
    std::vector<double> t_grid;
    double worst_ratio = 0.0;
    double worst_t = 0.0;
    std::size_t worst_state = 0;
    double slack = 2.0;
    bool horizon_ok = false;
};

ErgodicityCertificate certify_ergodicity(const AbsorbedChain& chain, const SpectralTriple& triple,
                                         const WeightFunction& psi1, std::vector<double> t_grid);

/// Default certification grid: 0 and geometric points up to 8 / gamma.
std::vector<double> default_certification_grid(double gamma);

}  // namespace qsd
