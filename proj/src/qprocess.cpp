#include "qsdlab/qprocess.hpp"

#include "qsdlab/error.hpp"

#include <cmath>
#include <limits>

namespace qsd {

QProcessChain h_transform(const AbsorbedChain& chain, const SpectralTriple& triple,
                          const WeightFunction& psi1) {
    const auto n = static_cast<Eigen::Index>(chain.size());
    if (triple.eta.size() != n || psi1.psi1.size() != n) {
        throw Error(ErrorKind::InvalidArgument, "spectral triple or weight has the wrong size");
    }
    const double floor = 1e-12 * triple.eta.cwiseAbs().maxCoeff();
    for (Eigen::Index x = 0; x < n; ++x) {
        if (!(triple.eta(x) > floor)) {
            throw Error(ErrorKind::ZeroEta, "eta(" + chain.states()[static_cast<std::size_t>(x)] +
                                                ") is not positive; the chain cannot be irreducible");
        }
    }
    const Matrix& l = chain.generator();
    QProcessChain q;
    q.generator = Matrix::Zero(n, n);
    for (Eigen::Index x = 0; x < n; ++x) {
        double off = 0.0;
        for (Eigen::Index y = 0; y < n; ++y) {
            if (x == y) continue;
            q.generator(x, y) = triple.eta(y) * l(x, y) / triple.eta(x);
            off += q.generator(x, y);
        }
        q.generator(x, x) = -off;
        q.support.push_back(static_cast<std::size_t>(x));
    }
    q.beta = triple.eta.cwiseProduct(triple.alpha);
    q.beta /= q.beta.sum();
    q.psi = psi1.psi1.cwiseQuotient(triple.eta);
    q.c = q.psi.minCoeff();
    q.eta = triple.eta;
    q.alpha = triple.alpha;
    q.psi1 = psi1.psi1;
    q.lambda0 = triple.lambda0;
    q.gamma = triple.gamma;
    return q;
}

QProcessChain h_transform(const AbsorbedChain& chain, const SpectralTriple& triple) {
    return h_transform(chain, triple, WeightFunction::ones(chain.size()));
}

Vector eta_reweighted(const Vector& mu, const Vector& eta) {
    const double mass = mu.dot(eta);
    if (!(mass > 0.0)) throw Error(ErrorKind::InvalidArgument, "mu(eta) must be positive");
    return mu.cwiseProduct(eta) / mass;
}

Vector q_marginal(const QProcessChain& q, const Vector& initial, double t) {
    if (t == 0.0) return initial;
    return (initial.transpose() * expm(t * q.generator)).transpose();
}

QErgodicityReport check_q_ergodicity(const QProcessChain& q, const std::vector<double>& t_grid) {
    QErgodicityReport report;
    const auto n = static_cast<Eigen::Index>(q.size());
    const double eta_norm = q.eta.cwiseQuotient(q.psi1).maxCoeff();  // ||eta||_{L^inf(psi1)}
    const double rate = std::isinf(q.gamma) ? 0.0 : q.gamma;
    std::vector<double> ts, devs;
    for (double t : t_grid) {
        const Matrix qt = expm(t * q.generator);
        QErgodicityRow row;
        row.t = t;
        for (Eigen::Index x = 0; x < n; ++x) {
            const Vector deviation = qt.row(x).transpose() - q.beta;
            row.worst_deviation = std::max(row.worst_deviation, weighted_norm(deviation, q.psi) / q.psi(x));
            const double tv = deviation.cwiseAbs().sum();
            row.worst_tv = std::max(row.worst_tv, tv * q.eta(x) / (eta_norm * q.psi1(x)));
        }
        row.implied_C = row.worst_deviation * std::exp(rate * t);
        row.tv_implied_C = row.worst_tv * std::exp(rate * t);
        report.rows.push_back(row);
        if (t > 0.0 && row.worst_deviation > 0.0) {
            ts.push_back(t);
            devs.push_back(row.worst_deviation);
        }
    }
    report.fitted_rate = -fit_semilog_slope(ts, devs);
    return report;
}

Vector conditional_marginal(const AbsorbedChain& chain, const Vector& mu, double t, double T) {
    if (!(t >= 0.0) || !(T >= t)) throw Error(ErrorKind::InvalidArgument, "need 0 <= t <= T");
    const Vector forward = (mu.transpose() * semigroup(chain, t)).transpose();
    const Vector survival = semigroup(chain, T - t) * Vector::Ones(mu.size());
    Vector law = forward.cwiseProduct(survival);
    return law / law.sum();
}

namespace {

ConditionalGapReport gap_at(const AbsorbedChain& chain, const SpectralTriple& triple,
                            const ErgodicityCertificate& cert, const Vector& mu, const Vector& q_law,
                            double t, double T) {
    ConditionalGapReport r;
    r.t = t;
    r.T = T;
    const Vector diff = conditional_marginal(chain, mu, t, T) - q_law;
    r.l1_gap = diff.cwiseAbs().sum();
    r.tv_gap = 0.5 * r.l1_gap;
    const double mu_psi1 = mu.dot(cert.psi1.psi1);
    const double mu_eta = mu.dot(triple.eta);
    r.threshold = std::log(2.0 * cert.C * mu_psi1 / mu_eta) / triple.gamma;
    r.threshold_ok = T >= r.threshold;
    return r;
}

}  // namespace

ConditionalGapSweep sweep_conditional_gap(const AbsorbedChain& chain, const SpectralTriple& triple,
                                          const ErgodicityCertificate& cert, const Vector& mu, double t,
                                          const std::vector<double>& horizon_offsets) {
    QProcessChain q = h_transform(chain, triple, cert.psi1);
    const Vector q_law = q_marginal(q, eta_reweighted(mu, triple.eta), t);
    const double ratio = mu.dot(cert.psi1.psi1) / mu.dot(triple.eta);

    ConditionalGapSweep sweep;
    std::vector<double> offsets, gaps;
    for (double s : horizon_offsets) {
        if (!(s >= 0.0)) throw Error(ErrorKind::InvalidArgument, "horizon offsets must be nonnegative");
        ConditionalGapReport r = gap_at(chain, triple, cert, mu, q_law, t, t + s);
        sweep.prefactor = std::max(sweep.prefactor, r.tv_gap * std::exp(triple.gamma * s) / ratio);
        offsets.push_back(s);
        gaps.push_back(r.tv_gap);
        sweep.rows.push_back(r);
    }
    sweep.fitted_rate = -fit_semilog_slope(offsets, gaps);
    for (auto& r : sweep.rows) {
        r.prefactor = sweep.prefactor;
        r.bound = sweep.prefactor * ratio * std::exp(-triple.gamma * (r.T - r.t));
        r.fitted_rate = sweep.fitted_rate;
    }
    return sweep;
}

ConditionalGapReport conditional_vs_q_gap(const AbsorbedChain& chain, const SpectralTriple& triple,
                                          const ErgodicityCertificate& cert, const Vector& mu, double t,
                                          double T) {
    if (!(T >= t)) throw Error(ErrorKind::InvalidArgument, "need t <= T");
    std::vector<double> offsets;
    if (T > t) {
        for (int j = 1; j <= 6; ++j) offsets.push_back((T - t) * j / 6.0);
    } else {
        offsets.push_back(0.0);
    }
    auto sweep = sweep_conditional_gap(chain, triple, cert, mu, t, offsets);
    ConditionalGapReport r = sweep.rows.back();
    r.T = T;
    if (T == t) r.fitted_rate = std::numeric_limits<double>::quiet_NaN();
    return r;
}

bool is_reversible(const QProcessChain& q, double tol) {
    const auto n = static_cast<Eigen::Index>(q.size());
    for (Eigen::Index x = 0; x < n; ++x) {
        for (Eigen::Index y = x + 1; y < n; ++y) {
            if (std::abs(q.beta(x) * q.generator(x, y) - q.beta(y) * q.generator(y, x)) > tol) return false;
        }
    }
    return true;
}

}  // namespace qsd
