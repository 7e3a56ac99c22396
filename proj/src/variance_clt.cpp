#include "qsdlab/variance_clt.hpp"

#include "qsdlab/constants.hpp"
#include "qsdlab/error.hpp"
#include "qsdlab/philox.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qsd {

AdditiveObservable make_observable(const Vector& f, const Vector& beta) {
    if (f.size() != beta.size() || f.size() == 0) {
        throw Error(ErrorKind::InvalidArgument, "observable and beta sizes differ");
    }
    if (!f.allFinite() || f.cwiseAbs().maxCoeff() > 1.0) {
        throw Error(ErrorKind::InvalidArgument, "observable must satisfy |f| <= 1");
    }
    AdditiveObservable obs;
    obs.f = f;
    if ((f.array() == f(0)).all()) {
        obs.beta_f = f(0);
        obs.centered = Vector::Zero(f.size());
    } else {
        obs.beta_f = beta.dot(f);
        obs.centered = f - Vector::Constant(f.size(), obs.beta_f);
    }
    return obs;
}

VarianceResult sigma2_poisson(const QProcessChain& q, const AdditiveObservable& f) {
    const auto n = static_cast<Eigen::Index>(q.size());
    VarianceResult r;
    // (L_Q - 1 beta^T) is invertible on an irreducible chain, and its solution
    // of (L_Q - 1 beta^T) g = -f satisfies beta(g) = 0 when beta(f) = 0.
    const Matrix system = q.generator - Vector::Ones(n) * q.beta.transpose();
    const Eigen::FullPivLU<Matrix> lu(system);
    if (!lu.isInvertible() || lu.rcond() < 1e-14) {
        throw Error(ErrorKind::SingularSolve, "Poisson system is singular");
    }
    r.poisson_solution = lu.solve(-f.centered);
    r.sigma2 = 2.0 * q.beta.dot(f.centered.cwiseProduct(r.poisson_solution));
    if (r.sigma2 < 0.0 && r.sigma2 >= -1e-12) r.sigma2 = 0.0;
    r.quadrature_value = std::numeric_limits<double>::quiet_NaN();
    r.quadrature_error_bound = std::numeric_limits<double>::quiet_NaN();
    return r;
}

QuadratureResult sigma2_quadrature(const QProcessChain& q, const AdditiveObservable& f, double horizon,
                                   double step, double C) {
    if (!(horizon >= 10.0 / q.gamma * (1.0 - 1e-12)) || !(step > 0.0) ||
        !(step <= 0.01 / q.gamma * (1.0 + 1e-12))) {
        throw Error(ErrorKind::InvalidArgument, "quadrature needs horizon >= 10/gamma and 0 < step <= 0.01/gamma");
    }
    QuadratureResult r;
    auto intervals = static_cast<long long>(std::ceil(horizon / step));
    if (intervals % 2 != 0) ++intervals;
    r.horizon = horizon;
    r.step = horizon / static_cast<double>(intervals);

    const Vector& g = f.centered;
    const Vector weight = q.beta.cwiseProduct(g);
    const Matrix transition = expm(r.step * q.generator);
    Vector v = g;
    double sum = 0.0;
    for (long long j = 0; j <= intervals; ++j) {
        const double cov = weight.dot(v);
        const double w = (j == 0 || j == intervals) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
        sum += w * cov;
        v = transition * v;
    }
    r.value = 2.0 * sum * r.step / 3.0;

    // Geometric tail past the horizon, applied either to g itself or to the
    // computed Q_H g (Cov(s) = beta(g Q_{s-H} Q_H g)); the smaller is kept.
    const double sup_ratio = g.cwiseQuotient(q.psi).cwiseAbs().maxCoeff();
    const double weighted_mass = q.beta.dot(g.cwiseAbs().cwiseProduct(q.psi));
    const double a_priori = C * sup_ratio * std::exp(-q.gamma * r.horizon);
    const Vector at_horizon = expm(r.horizon * q.generator) * g;
    const double a_posteriori = C * at_horizon.cwiseQuotient(q.psi).cwiseAbs().maxCoeff();
    r.truncation_bound = 2.0 * std::min(a_priori, a_posteriori) * weighted_mass / q.gamma;
    const double norm = inf_norm(q.generator);
    const double fourth = q.beta.dot(g.cwiseAbs()) * std::pow(norm, 4) * g.cwiseAbs().maxCoeff();
    r.discretization_bound = 2.0 * horizon * std::pow(r.step, 4) / 180.0 * fourth;
    return r;
}

VarianceResult sigma2_with_oracle(const QProcessChain& q, const AdditiveObservable& f, double C) {
    VarianceResult r = sigma2_poisson(q, f);
    if (std::isinf(q.gamma)) {
        r.quadrature_value = 0.0;
        r.quadrature_error_bound = 0.0;
        return r;
    }
    const double horizon = 20.0 / q.gamma;
    const double step = std::min(0.01 / q.gamma, 0.005 / std::max(inf_norm(q.generator), 1e-300));
    const QuadratureResult quad = sigma2_quadrature(q, f, horizon, step, C);
    r.quadrature_value = quad.value;
    r.quadrature_error_bound = quad.error_bound();
    r.quadrature_truncation_bound = quad.truncation_bound;
    r.horizon = quad.horizon;
    r.step = quad.step;
    return r;
}

double ConstantsTable::even_moment_coefficient(std::size_t k) const {
    return constants::even_moment_coefficient<double>(k, C, gamma, c, beta_psi);
}

double ConstantsTable::odd_moment_coefficient(std::size_t k) const {
    return constants::odd_moment_coefficient<double>(k, C, gamma, c, beta_psi);
}

ConstantsTable constants_table(const ErgodicityCertificate& cert, const QProcessChain& q, std::size_t K) {
    if (K < 1) throw Error(ErrorKind::InvalidArgument, "constants table needs K >= 1");
    ConstantsTable t;
    t.C = cert.C;
    t.gamma = cert.gamma;
    t.c = q.c;
    t.beta_psi = q.beta.dot(q.psi);
    t.C1 = constants::c_first(t.gamma);
    for (std::size_t k = 1; k <= K; ++k) {
        t.D.push_back(constants::d_closed<double>(k, t.C, t.gamma, t.c, t.beta_psi));
        t.Ck.push_back(constants::c_closed<double>(k, t.gamma));
    }
    return t;
}

std::vector<Vector> augmented_moments(const Matrix& generator, const Vector& initial, const Vector& f,
                                      std::size_t k_max, double t) {
    if (k_max > kMaxMomentOrder) {
        throw Error(ErrorKind::InvalidArgument, "moment order above " + std::to_string(kMaxMomentOrder));
    }
    if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "t must be nonnegative");
    const Eigen::Index n = generator.rows();
    const auto blocks = static_cast<Eigen::Index>(k_max + 1);
    // Superdiagonal blocks carry j s diag(f) with s = 1/sqrt(t) for t > 1, so
    // the exponential holds s^j-scaled moments of order one under centering.
    const double scale = t > 1.0 ? 1.0 / std::sqrt(t) : 1.0;
    Matrix a = Matrix::Zero(n * blocks, n * blocks);
    for (Eigen::Index j = 0; j < blocks; ++j) {
        a.block(j * n, j * n, n, n) = generator;
        if (j > 0) {
            a.block((j - 1) * n, j * n, n, n) = (static_cast<double>(j) * scale * f).asDiagonal();
        }
    }
    const Matrix e = expm(t * a);
    std::vector<Vector> out;
    for (Eigen::Index j = 0; j < blocks; ++j) {
        const Vector row = (initial.transpose() * e.block(0, j * n, n, n)).transpose();
        out.push_back(row / std::pow(scale, static_cast<double>(j)));
    }
    return out;
}

namespace {

MomentValues collect(const std::vector<Vector>& rows, double t) {
    MomentValues m;
    m.t = t;
    m.survival = rows.front().sum();
    for (const auto& r : rows) {
        m.raw.push_back(r.sum());
        m.conditional.push_back(r.sum() / m.survival);
    }
    return m;
}

double even_limit(double sigma2, std::size_t k) {
    return constants::factorial<double>(2 * k) / constants::factorial<double>(k) * std::pow(sigma2 / 2.0, k);
}

MomentReport even_report(const std::vector<double>& t_grid, std::size_t k, double sigma2, auto&& moment_at) {
    MomentReport r;
    r.k = k;
    r.t_grid = t_grid;
    r.limit = even_limit(sigma2, k);
    for (double t : t_grid) {
        const double v = moment_at(t) / std::pow(t, static_cast<double>(k));
        r.values.push_back(v);
        r.errors.push_back(std::abs(v - r.limit));
    }
    r.fitted_slope = fit_loglog_slope(r.t_grid, r.errors);
    return r;
}

}  // namespace

MomentValues exact_conditional_moments(const AbsorbedChain& chain, const Vector& mu, const Vector& f,
                                       std::size_t k_max, double t) {
    return collect(augmented_moments(chain.generator(), mu, f, k_max, t), t);
}

MomentValues q_moments(const QProcessChain& q, const Vector& initial, const Vector& f, std::size_t k_max,
                       double t) {
    return collect(augmented_moments(q.generator, initial, f, k_max, t), t);
}

MomentReport check_even_moment_limit(const QProcessChain& q, const Vector& mu, const AdditiveObservable& f,
                                     double sigma2, std::size_t k, const std::vector<double>& t_grid,
                                     const ConstantsTable* table) {
    MomentReport r = even_report(t_grid, k, sigma2, [&](double t) {
        return q_moments(q, mu, f.centered, 2 * k, t).raw[2 * k];
    });
    if (table != nullptr && k >= 1) {
        const double coefficient = table->even_moment_coefficient(k) * mu.dot(q.psi);
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            r.bounds.push_back(coefficient / t_grid[i]);
            r.within_bound = r.within_bound && r.errors[i] <= r.bounds[i];
        }
    }
    return r;
}

MomentReport check_even_moment_limit(const AbsorbedChain& chain, const Vector& mu, const AdditiveObservable& f,
                                     double sigma2, std::size_t k, const std::vector<double>& t_grid) {
    return even_report(t_grid, k, sigma2, [&](double t) {
        return exact_conditional_moments(chain, mu, f.centered, 2 * k, t).conditional[2 * k];
    });
}

OddMomentReport check_odd_moment_decay(const QProcessChain& q, const Vector& mu, const AdditiveObservable& f,
                                       std::size_t k, const std::vector<double>& t_grid,
                                       const ConstantsTable& table) {
    OddMomentReport r;
    r.k = k;
    r.t_grid = t_grid;
    r.coefficient = table.odd_moment_coefficient(k);
    const double mu_psi = mu.dot(q.psi);
    for (double t : t_grid) {
        const double m = q_moments(q, mu, f.centered, 2 * k + 1, t).raw[2 * k + 1];
        const double v = m / std::pow(t, static_cast<double>(k) + 0.5);
        r.values.push_back(v);
        r.fitted_prefactor = std::max(r.fitted_prefactor, std::abs(v) * std::sqrt(t) / (r.coefficient * mu_psi));
    }
    r.fitted_slope = fit_loglog_slope(r.t_grid, r.values);
    return r;
}

ComplexVector charfun_weighted(const Matrix& generator, const Vector& initial, const Vector& f,
                               double omega_prime, double t) {
    ComplexMatrix a = generator.cast<std::complex<double>>();
    a.diagonal() += std::complex<double>(0.0, omega_prime) * f.cast<std::complex<double>>();
    const ComplexMatrix e = expm(ComplexMatrix(t * a));
    return (initial.cast<std::complex<double>>().transpose() * e).transpose();
}

std::complex<double> exact_conditional_charfun(const AbsorbedChain& chain, const Vector& mu, const Vector& f,
                                               double omega, double t) {
    if (!(t > 0.0)) throw Error(ErrorKind::InvalidArgument, "t must be positive");
    const ComplexVector u = charfun_weighted(chain.generator(), mu, f, omega / std::sqrt(t), t);
    const double survival = (mu.transpose() * semigroup(chain, t)).sum();
    return u.sum() / survival;
}

std::complex<double> q_charfun(const QProcessChain& q, const Vector& initial, const Vector& f, double omega,
                               double t) {
    if (!(t > 0.0)) throw Error(ErrorKind::InvalidArgument, "t must be positive");
    return charfun_weighted(q.generator, initial, f, omega / std::sqrt(t), t).sum();
}

double sup_over_weighted_ball(const ComplexVector& z, const Vector& psi) {
    // F(theta) = sum psi |Re(e^{-i theta} z)| changes its sign pattern only at
    // theta = arg z_y +- pi/2; the sup is attained by one of those patterns.
    const Eigen::Index n = z.size();
    std::vector<double> breaks;
    for (Eigen::Index y = 0; y < n; ++y) {
        if (z(y) == std::complex<double>(0.0, 0.0)) continue;
        const double phase = std::arg(z(y)) + std::numbers::pi / 2.0;
        breaks.push_back(std::fmod(phase + 2.0 * std::numbers::pi, std::numbers::pi));
    }
    if (breaks.empty()) return 0.0;
    std::sort(breaks.begin(), breaks.end());
    breaks.push_back(breaks.front() + std::numbers::pi);
    double best = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double theta = 0.5 * (breaks[i] + breaks[i + 1]);
        const std::complex<double> rot = std::polar(1.0, -theta);
        std::complex<double> total = 0.0;
        for (Eigen::Index y = 0; y < n; ++y) {
            const double sign = (rot * z(y)).real() >= 0.0 ? 1.0 : -1.0;
            total += sign * psi(y) * z(y);
        }
        best = std::max(best, std::abs(total));
    }
    return best;
}

std::vector<Vector> g_ball_samples(const Vector& psi, std::size_t random_profiles, std::uint64_t seed) {
    const Eigen::Index n = psi.size();
    std::vector<Vector> out;
    if (n <= 10) {
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
            Vector g = psi;
            for (Eigen::Index y = 0; y < n; ++y) {
                if ((mask >> y) & 1u) g(y) = -g(y);
            }
            out.push_back(g);
        }
    } else {
        out.push_back(psi);
        out.push_back(-psi);
    }
    PhiloxStream stream(seed, 0);
    for (std::size_t i = 0; i < random_profiles; ++i) {
        Vector g(n);
        for (Eigen::Index y = 0; y < n; ++y) g(y) = (2.0 * stream.uniform() - 1.0) * psi(y);
        out.push_back(g);
    }
    return out;
}

UniformCharfunReport check_uniform_charfun_bound(const QProcessChain& q, const ErgodicityCertificate& cert,
                                                 const Vector& mu, const AdditiveObservable& f, double sigma2,
                                                 double omega, const std::vector<double>& t_grid,
                                                 const std::vector<Vector>& g_ball) {
    UniformCharfunReport report;
    report.omega = omega;
    const double mu_psi = mu.dot(q.psi);
    const double beta_psi = q.beta.dot(q.psi);
    const double gaussian = std::exp(-sigma2 * omega * omega / 2.0);
    for (double t : t_grid) {
        UniformCharfunRow row;
        row.t = t;
        const ComplexVector w = charfun_weighted(q.generator, mu, f.centered, omega / std::sqrt(t), t);
        const std::complex<double> total = w.sum();
        const ComplexVector coupling = w - q.beta.cast<std::complex<double>>() * total;
        const ComplexVector limit = w - q.beta.cast<std::complex<double>>() * gaussian;
        row.coupling_sup = sup_over_weighted_ball(coupling, q.psi);
        row.limit_sup = sup_over_weighted_ball(limit, q.psi);
        for (const Vector& g : g_ball) {
            const std::complex<double> value = (g.cast<std::complex<double>>().array() * coupling.array()).sum();
            row.coupling_sup_sampled = std::max(row.coupling_sup_sampled, std::abs(value));
        }
        row.bound = cert.C * mu_psi * std::exp(-q.gamma * t) +
                    cert.C * std::abs(omega) / std::sqrt(t) * (beta_psi + cert.C * mu_psi) / q.gamma;
        row.within_bound = row.coupling_sup <= row.bound && row.coupling_sup_sampled <= row.bound;
        report.rows.push_back(row);
    }
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        if (report.rows[i].limit_sup > 1.1 * report.rows[i - 1].limit_sup) report.limit_monotone = false;
    }
    return report;
}

}  // namespace qsd
