#include <doctest.h>

#include "qsdlab/error.hpp"
#include "qsdlab/constants.hpp"
#include "qsdlab/variance_clt.hpp"
#include "random_chain.hpp"

#include <cmath>
#include <numbers>

using namespace qsd;

namespace {

struct Fixture {
    AbsorbedChain chain;
    SpectralTriple triple;
    QProcessChain q;
    ErgodicityCertificate cert;
};

Fixture make(const AbsorbedChain& c) {
    const SpectralTriple t = solve_spectral(c);
    return {c, t, h_transform(c, t),
            certify_ergodicity(c, t, WeightFunction::ones(c.size()), default_certification_grid(t.gamma))};
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

Vector indicator(std::size_t n, std::size_t x) {
    Vector f = Vector::Zero(static_cast<Eigen::Index>(n));
    f(static_cast<Eigen::Index>(x)) = 1.0;
    return f;
}

}  // namespace

TEST_CASE("observables are centered against beta") {
    const Vector beta = vec({0.25, 0.75});
    const AdditiveObservable a = make_observable(vec({1, -1}), beta);
    CHECK(a.beta_f == doctest::Approx(-0.5));
    CHECK(std::abs(beta.dot(a.centered)) <= 1e-15);
    const AdditiveObservable c = make_observable(vec({0.3, 0.3}), beta);
    CHECK(c.centered == Vector::Zero(2));
    CHECK(c.beta_f == 0.3);
    CHECK_THROWS_AS(make_observable(vec({2, 0}), beta), Error);
}

TEST_CASE("sigma2 by the Poisson equation") {
    SUBCASE("constant f") {
        const Fixture f = make(fixtures::bd5());
        CHECK(sigma2_poisson(f.q, make_observable(Vector::Constant(5, 0.4), f.q.beta)).sigma2 == 0.0);
    }
    SUBCASE("M2SYM: L_Q f = -2 f, so g = f / 2 and sigma2 = 1") {
        const Fixture f = make(fixtures::m2sym());
        const VarianceResult v = sigma2_poisson(f.q, make_observable(vec({1, -1}), f.q.beta));
        CHECK(std::abs(v.sigma2 - 1.0) <= 1e-10);
        CHECK((v.poisson_solution - vec({0.5, -0.5})).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("BD5 against quadrature") {
        const Fixture f = make(fixtures::bd5());
        const VarianceResult v = sigma2_with_oracle(f.q, make_observable(indicator(5, 0), f.q.beta), f.cert.C);
        CHECK(std::abs(v.sigma2 - v.quadrature_value) <= 1e-8);
        CHECK(std::abs(v.sigma2 - v.quadrature_value) <= v.quadrature_error_bound);
        CHECK(std::abs(f.q.beta.dot(v.poisson_solution)) <= 1e-12);
        CHECK(v.sigma2 == doctest::Approx(0.040282).epsilon(1e-4));
    }
}

TEST_CASE("sigma2 quadrature") {
    const Fixture f = make(fixtures::m2sym());
    const AdditiveObservable obs = make_observable(vec({1, -1}), f.q.beta);
    // Cov(s) = e^{-2s}: 2 int_0^H e^{-2s} ds = 1 - e^{-2H}.
    const QuadratureResult r = sigma2_quadrature(f.q, obs, 10.0, 0.004, f.cert.C);
    CHECK(std::abs(r.value - (1 - std::exp(-20.0))) <= r.discretization_bound + 1e-14);
    CHECK(std::abs(r.value - 1.0) <= r.error_bound());
    CHECK(sigma2_quadrature(f.q, make_observable(vec({1, 1}), f.q.beta), 10.0, 0.004, f.cert.C).value == 0.0);
    CHECK_THROWS_AS(sigma2_quadrature(f.q, obs, 2.0, 0.004, f.cert.C), Error);
    CHECK_THROWS_AS(sigma2_quadrature(f.q, obs, 10.0, 0.1, f.cert.C), Error);
}

TEST_CASE("Poisson and quadrature agree on random chains") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto& c : testing::random_chain_set()) {
        const Fixture f = make(c);
        Vector g(static_cast<Eigen::Index>(c.size()));
        for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = u(rng);
        const VarianceResult v = sigma2_with_oracle(f.q, make_observable(g, f.q.beta), f.cert.C);
        CHECK(v.sigma2 >= 0.0);
        CHECK(std::abs(v.sigma2 - v.quadrature_value) <= v.quadrature_error_bound);
        if (c.size() == 10) CHECK(std::abs(v.sigma2 - v.quadrature_value) <= 1e-8);
    }
}

TEST_CASE("augmented moments") {
    const Fixture bd = make(fixtures::bd5());
    const Vector mu = InitialLaw::uniform(5).mu;
    SUBCASE("k = 0 is the survival probability") {
        const MomentValues m = exact_conditional_moments(bd.chain, mu, indicator(5, 2), 3, 2.5);
        const double p = (mu.transpose() * semigroup(bd.chain, 2.5)).sum();
        CHECK(m.raw[0] == doctest::Approx(p).epsilon(1e-13));
        CHECK(m.survival == doctest::Approx(p).epsilon(1e-13));
    }
    SUBCASE("f = 1 gives t^k p(t)") {
        for (double t : {0.5, 3.0, 30.0}) {
            const MomentValues m = exact_conditional_moments(bd.chain, mu, Vector::Ones(5), 6, t);
            for (std::size_t k = 0; k <= 6; ++k) {
                CHECK(m.raw[k] == doctest::Approx(std::pow(t, k) * m.survival).epsilon(1e-10));
            }
        }
    }
    SUBCASE("M2SYM second moment under Q from beta") {
        const Fixture f = make(fixtures::m2sym());
        for (double t : {0.1, 1.0, 10.0, 20.0, 160.0}) {
            const MomentValues m = q_moments(f.q, f.q.beta, vec({1, -1}), 2, t);
            const double exact = t - (1 - std::exp(-2 * t)) / 2;
            CHECK(std::abs(m.raw[2] - exact) <= 1e-9 * std::max(1.0, t));
            CHECK(std::abs(m.raw[1]) <= 1e-12 * t);
        }
    }
    SUBCASE("order above the limit is rejected") {
        CHECK_THROWS_AS(exact_conditional_moments(bd.chain, mu, Vector::Ones(5), 9, 1.0), Error);
    }
}

TEST_CASE("even moments") {
    SUBCASE("M2SYM k = 1 closed form") {
        const Fixture f = make(fixtures::m2sym());
        const AdditiveObservable obs = make_observable(vec({1, -1}), f.q.beta);
        const MomentReport r = check_even_moment_limit(f.q, f.q.beta, obs, 1.0, 1, {10.0, 20.0, 40.0});
        CHECK(r.limit == 1.0);
        CHECK(r.errors[0] == doctest::Approx((1 - std::exp(-20.0)) / 20.0).epsilon(1e-9));
        CHECK(r.fitted_slope == doctest::Approx(-1.0).epsilon(1e-6));
    }
    SUBCASE("constant f") {
        const Fixture f = make(fixtures::bd5());
        const AdditiveObservable obs = make_observable(Vector::Constant(5, 0.5), f.q.beta);
        const MomentReport r = check_even_moment_limit(f.q, f.q.beta, obs, 0.0, 2, {5.0, 10.0});
        for (double v : r.values) CHECK(v == 0.0);
        CHECK(r.limit == 0.0);
    }
    SUBCASE("BD5 k = 2 rate and bound") {
        const Fixture f = make(fixtures::bd5());
        const AdditiveObservable obs = make_observable(indicator(5, 0), f.q.beta);
        const double s2 = sigma2_poisson(f.q, obs).sigma2;
        const ConstantsTable table = constants_table(f.cert, f.q, 3);
        const MomentReport r = check_even_moment_limit(f.q, f.q.beta, obs, s2, 2, {20, 40, 80, 160}, &table);
        CHECK(r.fitted_slope >= -1.3);
        CHECK(r.fitted_slope <= -0.8);
        CHECK(r.within_bound);
        CHECK(r.bounds.size() == 4);
    }
    SUBCASE("conditional version converges too") {
        const Fixture f = make(fixtures::m2asym());
        const AdditiveObservable obs = make_observable(vec({1, -1}), f.q.beta);
        const double s2 = sigma2_poisson(f.q, obs).sigma2;
        const MomentReport r =
            check_even_moment_limit(f.chain, InitialLaw::uniform(2).mu, obs, s2, 1, {20, 40, 80, 160});
        CHECK(r.fitted_slope >= -1.3);
        CHECK(r.fitted_slope <= -0.8);
    }
}

TEST_CASE("odd moments") {
    SUBCASE("symmetric M2SYM has vanishing odd moments") {
        const Fixture f = make(fixtures::m2sym());
        const AdditiveObservable obs = make_observable(vec({1, -1}), f.q.beta);
        const ConstantsTable table = constants_table(f.cert, f.q, 3);
        for (std::size_t k : {0u, 1u, 2u}) {
            const OddMomentReport r = check_odd_moment_decay(f.q, f.q.beta, obs, k, {10, 40}, table);
            for (double v : r.values) CHECK(std::abs(v) < 1e-12);
        }
    }
    SUBCASE("M2ASYM from a point mass decays like t^{-1/2}") {
        const Fixture f = make(fixtures::m2asym());
        const AdditiveObservable obs = make_observable(vec({1, -1}), f.q.beta);
        const ConstantsTable table = constants_table(f.cert, f.q, 3);
        const Vector mu = InitialLaw::point_mass(2, 0).mu;
        for (std::size_t k : {0u, 1u}) {
            const OddMomentReport r = check_odd_moment_decay(f.q, mu, obs, k, {20, 40, 80, 160}, table);
            CHECK(r.fitted_slope >= -0.7);
            CHECK(r.fitted_slope <= -0.3);
            CHECK(r.fitted_prefactor > 0.0);
        }
    }
    SUBCASE("k = 0 is the first moment") {
        const Fixture f = make(fixtures::bd5());
        const AdditiveObservable obs = make_observable(indicator(5, 4), f.q.beta);
        const ConstantsTable table = constants_table(f.cert, f.q, 1);
        const Vector mu = InitialLaw::point_mass(5, 0).mu;
        const OddMomentReport r = check_odd_moment_decay(f.q, mu, obs, 0, {50, 500}, table);
        const double m1 = q_moments(f.q, mu, obs.centered, 1, 500).raw[1];
        CHECK(r.values[1] == doctest::Approx(m1 / std::sqrt(500.0)));
        CHECK(std::abs(r.values[1]) < std::abs(r.values[0]));
    }
}

TEST_CASE("characteristic functions") {
    const Fixture bd = make(fixtures::bd5());
    const Vector mu = InitialLaw::uniform(5).mu;
    CHECK(std::abs(exact_conditional_charfun(bd.chain, mu, indicator(5, 1), 0.0, 7.0) - 1.0) <= 1e-12);
    for (double c : {0.3, -1.0}) {
        const double t = 4.0, omega = 1.3;
        const auto v = exact_conditional_charfun(bd.chain, mu, Vector::Constant(5, c), omega, t);
        CHECK(std::abs(v - std::polar(1.0, omega * std::sqrt(t) * c)) <= 1e-11);
    }
    const Fixture f = make(fixtures::m2sym());
    const auto v = exact_conditional_charfun(f.chain, f.q.beta, vec({1, -1}), 1.0, 50.0);
    CHECK(std::abs(std::abs(v) - std::exp(-0.5)) <= 0.05);
    CHECK(std::abs(q_charfun(f.q, f.q.beta, vec({1, -1}), 1.0, 50.0) - v) <= 1e-12);
}

TEST_CASE("Taylor coefficients of the charfun are the moments") {
    // Interpolate omega' -> E[exp(i omega' S_t) | tau > t] on 13 points and
    // read off the Taylor coefficients i^k m_k / k!.
    const int m = 6;
    const double h = 0.1;
    Matrix vandermonde(2 * m + 1, 2 * m + 1);
    for (int j = -m; j <= m; ++j) {
        for (int p = 0; p <= 2 * m; ++p) vandermonde(j + m, p) = std::pow(j * h, p);
    }
    const Eigen::PartialPivLU<Matrix> lu(vandermonde);
    for (const auto& c : {fixtures::m2asym(), fixtures::bd5()}) {
        const Fixture fx = make(c);
        const auto n = static_cast<Eigen::Index>(c.size());
        const Vector mu = InitialLaw::uniform(c.size()).mu;
        Vector f = Vector::LinSpaced(n, -1.0, 1.0);
        for (double t : {1.0, 2.0}) {
            Vector re(2 * m + 1), im(2 * m + 1);
            const double p = (mu.transpose() * semigroup(c, t)).sum();
            for (int j = -m; j <= m; ++j) {
                const auto z = charfun_weighted(c.generator(), mu, f, j * h, t).sum() / p;
                re(j + m) = z.real();
                im(j + m) = z.imag();
            }
            const Vector a = lu.solve(re), b = lu.solve(im);
            const MomentValues mv = exact_conditional_moments(c, mu, f, 4, t);
            const std::complex<double> i(0.0, 1.0);
            for (int k = 0; k <= 4; ++k) {
                const std::complex<double> coeff(a(k), b(k));
                const std::complex<double> moment = coeff * constants::factorial<double>(k) / std::pow(i, k);
                CHECK(std::abs(moment.real() - mv.conditional[static_cast<std::size_t>(k)]) <= 1e-6);
                CHECK(std::abs(moment.imag()) <= 1e-6);
            }
        }
    }
}

TEST_CASE("sup over the psi-ball is exact") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = 2 + trial % 7;
        ComplexVector z(n);
        Vector psi(n);
        for (Eigen::Index y = 0; y < n; ++y) {
            z(y) = {g(rng), g(rng)};
            psi(y) = 1.0 + std::abs(g(rng));
        }
        double brute = 0.0;
        for (const Vector& s : g_ball_samples(psi, 0, 0)) {
            brute = std::max(brute, std::abs((s.cast<std::complex<double>>().array() * z.array()).sum()));
        }
        const double exact = sup_over_weighted_ball(z, psi);
        CHECK(exact == doctest::Approx(brute).epsilon(1e-12));
        for (const Vector& s : g_ball_samples(psi, 50, trial)) {
            CHECK(std::abs((s.cast<std::complex<double>>().array() * z.array()).sum()) <= exact * (1 + 1e-12));
        }
    }
    CHECK(sup_over_weighted_ball(ComplexVector::Zero(3), Vector::Ones(3)) == 0.0);
}

TEST_CASE("g-ball samples") {
    const Vector psi = vec({1.0, 2.0, 3.0});
    const auto samples = g_ball_samples(psi, 10, 42);
    CHECK(samples.size() == 8 + 10);
    for (const Vector& s : samples) CHECK((s.cwiseAbs() - psi).maxCoeff() <= 0.0);
    CHECK(g_ball_samples(psi, 10, 42) == samples);
}

TEST_CASE("uniform charfun bound") {
    SUBCASE("omega = 0 reduces to Q-ergodicity") {
        const Fixture f = make(fixtures::bd5());
        const AdditiveObservable obs = make_observable(indicator(5, 0), f.q.beta);
        const Vector mu = InitialLaw::point_mass(5, 0).mu;
        const auto ball = g_ball_samples(f.q.psi, 20, 1);
        const auto rep = check_uniform_charfun_bound(f.q, f.cert, mu, obs, 0.04, 0.0, {1.0, 5.0, 10.0}, ball);
        for (const auto& row : rep.rows) {
            const Vector dev = q_marginal(f.q, mu, row.t) - f.q.beta;
            CHECK(row.coupling_sup == doctest::Approx(weighted_norm(dev, f.q.psi)).epsilon(1e-10));
            CHECK(row.coupling_sup <= f.cert.C * mu.dot(f.q.psi) * std::exp(-f.q.gamma * row.t));
            CHECK(row.within_bound);
        }
    }
    SUBCASE("constant g contributes nothing") {
        const Fixture f = make(fixtures::m2asym());
        const AdditiveObservable obs = make_observable(vec({1, -1}), f.q.beta);
        const auto rep = check_uniform_charfun_bound(f.q, f.cert, InitialLaw::uniform(2).mu, obs, 1.0, 1.0, {3.0},
                                                     {Vector::Constant(2, 1.0)});
        CHECK(rep.rows[0].coupling_sup_sampled <= 1e-14);
    }
    SUBCASE("M2SYM omega = 1") {
        const Fixture f = make(fixtures::m2sym());
        const AdditiveObservable obs = make_observable(vec({1, -1}), f.q.beta);
        const auto rep = check_uniform_charfun_bound(f.q, f.cert, f.q.beta, obs, 1.0, 1.0, {10, 40, 160},
                                                     g_ball_samples(f.q.psi, 20, 3));
        for (const auto& row : rep.rows) CHECK(row.within_bound);
        CHECK(rep.limit_monotone);
        CHECK(rep.rows[2].limit_sup < rep.rows[0].limit_sup);
    }
}
