#include "qsdlab/montecarlo.hpp"

#include "qsdlab/error.hpp"
#include "qsdlab/parallel.hpp"
#include "qsdlab/variance_clt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qsd {

double Trajectory::additive_integral(const Vector& f) const {
    const double end = std::min(t_max, absorption_time);
    double total = 0.0;
    double start = 0.0;
    for (std::size_t j = 0; j < jump_times.size(); ++j) {
        total += f(static_cast<Eigen::Index>(visited_states[j])) * (jump_times[j] - start);
        start = jump_times[j];
    }
    total += f(static_cast<Eigen::Index>(visited_states.back())) * (end - start);
    return total;
}

std::size_t Trajectory::state_at(double t) const {
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    return visited_states[static_cast<std::size_t>(it - jump_times.begin())];
}

JumpTable::JumpTable(const Matrix& generator) {
    const auto n = static_cast<std::size_t>(generator.rows());
    rates_.resize(n);
    cumulative_.resize(n);
    for (std::size_t x = 0; x < n; ++x) {
        const auto xi = static_cast<Eigen::Index>(x);
        const double rate = -generator(xi, xi);
        rates_[x] = std::max(rate, 0.0);
        auto& cum = cumulative_[x];
        cum.resize(n);
        double acc = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            if (y != x && rate > 0.0) acc += generator(xi, static_cast<Eigen::Index>(y)) / rate;
            cum[y] = acc;
        }
        // A conservative row must never absorb because of rounding.
        const double killing = -generator.row(xi).sum();
        if (rate > 0.0 && killing <= 1e-12 * rate) {
            for (std::size_t y = n; y-- > 0;) {
                if (y == x) continue;
                if (generator(xi, static_cast<Eigen::Index>(y)) > 0.0) {
                    for (std::size_t z = y; z < n; ++z) cum[z] = 1.0;
                    break;
                }
            }
        }
    }
}

std::size_t JumpTable::next(std::size_t x, double u) const {
    const auto& cum = cumulative_[x];
    return static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
}

std::size_t sample_categorical(const Vector& law, double u) {
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (Eigen::Index i = 0; i < law.size(); ++i) {
        if (law(i) <= 0.0) continue;
        acc += law(i);
        last_positive = static_cast<std::size_t>(i);
        if (u < acc) return last_positive;
    }
    return last_positive;
}

namespace {

// Runs one path from x until t_max or absorption. on_hold(state, duration) is
// called for every sojourn inside [0, t_max], on_jump(time, state) for every
// jump to a live state. Returns the absorption time, or +inf.
template <class Hold, class Jump>
double walk(const JumpTable& table, std::size_t x, double t_max, PhiloxStream& rng, Hold&& on_hold,
            Jump&& on_jump) {
    double now = 0.0;
    for (;;) {
        const double rate = table.exit_rate(x);
        const double hold = rate > 0.0 ? rng.exponential(rate) : std::numeric_limits<double>::infinity();
        if (now + hold > t_max) {
            on_hold(x, t_max - now);
            return std::numeric_limits<double>::infinity();
        }
        on_hold(x, hold);
        now += hold;
        const std::size_t y = table.next(x, rng.uniform());
        if (y == table.size()) return now;
        on_jump(now, y);
        x = y;
    }
}

Trajectory record(const JumpTable& table, std::size_t x0, double t_max, PhiloxStream& rng) {
    Trajectory path;
    path.t_max = t_max;
    path.visited_states.push_back(x0);
    path.absorption_time = walk(
        table, x0, t_max, rng, [](std::size_t, double) {},
        [&](double time, std::size_t y) {
            path.jump_times.push_back(time);
            path.visited_states.push_back(y);
        });
    return path;
}

double integrate(const JumpTable& table, std::size_t x0, double t_max, PhiloxStream& rng, const Vector& f,
                 bool& absorbed) {
    double total = 0.0;
    const double tau = walk(
        table, x0, t_max, rng,
        [&](std::size_t x, double duration) { total += f(static_cast<Eigen::Index>(x)) * duration; },
        [](double, std::size_t) {});
    absorbed = std::isfinite(tau);
    return total;
}

}  // namespace

Trajectory simulate_absorbed(const AbsorbedChain& chain, const Vector& mu, double t_max, PhiloxStream& rng) {
    if (!(t_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "t_max must be positive");
    const JumpTable table(chain.generator());
    return record(table, sample_categorical(mu, rng.uniform()), t_max, rng);
}

Trajectory simulate_qprocess(const QProcessChain& q, const Vector& initial, double t_max, PhiloxStream& rng) {
    if (!(t_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "t_max must be positive");
    const JumpTable table(q.generator);
    return record(table, sample_categorical(initial, rng.uniform()), t_max, rng);
}

std::string to_string(ConditioningMethod method) {
    switch (method) {
        case ConditioningMethod::Automatic: return "auto";
        case ConditioningMethod::Rejection: return "rejection";
        case ConditioningMethod::QProcess: return "qprocess";
    }
    return "auto";
}

ConditioningMethod parse_method(const std::string& text) {
    if (text == "auto") return ConditioningMethod::Automatic;
    if (text == "rejection") return ConditioningMethod::Rejection;
    if (text == "qprocess") return ConditioningMethod::QProcess;
    throw Error(ErrorKind::InvalidArgument, "unknown method '" + text + "'");
}

ConditioningMethod resolve_method(ConditioningMethod method, double lambda0, double t) {
    if (method != ConditioningMethod::Automatic) return method;
    return t > 3.0 / lambda0 ? ConditioningMethod::QProcess : ConditioningMethod::Rejection;
}

EmpiricalDistribution conditional_clt_sample(const AbsorbedChain& chain, const SpectralTriple& triple,
                                             const Vector& mu, const Vector& f, double t, std::size_t n_replicas,
                                             ConditioningMethod method, const SamplingOptions& options,
                                             std::uint64_t first_stream) {
    if (!(t > 0.0)) throw Error(ErrorKind::InvalidArgument, "t must be positive");
    if (n_replicas == 0) throw Error(ErrorKind::InvalidArgument, "need at least one replica");
    const QProcessChain q = h_transform(chain, triple);
    if (!(mu.dot(q.eta) > 0.0)) throw Error(ErrorKind::InvalidArgument, "mu(eta) must be positive");
    const AdditiveObservable obs = make_observable(f, q.beta);
    const double sigma2 = sigma2_poisson(q, obs).sigma2;
    if (sigma2 <= 1e-12 && !options.allow_degenerate) {
        throw Error(ErrorKind::DegenerateVariance, "sigma^2 = " + std::to_string(sigma2) + " vanishes");
    }

    EmpiricalDistribution out;
    out.seed = options.seed;
    out.first_stream = first_stream;
    out.method = resolve_method(method, triple.lambda0, t);
    out.t = t;
    out.sigma2 = sigma2;
    out.beta_f = obs.beta_f;
    out.samples.resize(n_replicas);
    const double root_t = std::sqrt(t);
    const Vector& g = obs.centered;

    if (out.method == ConditioningMethod::Rejection) {
        const double survival = (mu.transpose() * semigroup(chain, t)).sum();
        const double expected = static_cast<double>(n_replicas) / survival;
        if (!(expected <= options.rejection_budget)) {
            throw Error(ErrorKind::BudgetExceeded, "rejection needs about " + std::to_string(expected) +
                                                       " paths, budget " +
                                                       std::to_string(options.rejection_budget));
        }
        const JumpTable table(chain.generator());
        std::vector<std::uint64_t> attempts(n_replicas, 0);
        parallel_for(n_replicas, options.threads, [&](std::size_t i) {
            PhiloxStream rng(options.seed, first_stream + i);
            for (;;) {
                ++attempts[i];
                bool absorbed = false;
                const double s = integrate(table, sample_categorical(mu, rng.uniform()), t, rng, g, absorbed);
                if (!absorbed) {
                    out.samples[i] = s / root_t;
                    return;
                }
            }
        });
        for (auto a : attempts) out.attempts += a;
    } else {
        const JumpTable table(q.generator);
        const Vector initial = eta_reweighted(mu, q.eta);
        parallel_for(n_replicas, options.threads, [&](std::size_t i) {
            PhiloxStream rng(options.seed, first_stream + i);
            bool absorbed = false;
            out.samples[i] = integrate(table, sample_categorical(initial, rng.uniform()), t, rng, g, absorbed) /
                             root_t;
        });
        out.attempts = n_replicas;
        for (int j = 1; j <= 30; ++j) {
            const double omega = 0.1 * j;
            const auto exact = exact_conditional_charfun(chain, mu, g, omega, t);
            const auto surrogate = q_charfun(q, initial, g, omega, t);
            out.gap_bound = std::max(out.gap_bound, std::abs(exact - surrogate));
        }
    }
    std::sort(out.samples.begin(), out.samples.end());
    out.n_effective = n_replicas;
    return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double kolmogorov_distance(const std::vector<double>& sorted, double sigma2) {
    if (!(sigma2 > 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma2 must be positive");
    if (sorted.empty()) throw Error(ErrorKind::InvalidArgument, "no samples");
    const double sigma = std::sqrt(sigma2);
    const double n = static_cast<double>(sorted.size());
    double worst = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double phi = normal_cdf(sorted[i] / sigma);
        worst = std::max({worst, std::abs(static_cast<double>(i) / n - phi),
                          std::abs(static_cast<double>(j) / n - phi)});
        i = j;
    }
    return worst;
}

double kolmogorov_distance(const EmpiricalDistribution& empirical, double sigma2) {
    return kolmogorov_distance(empirical.samples, sigma2);
}

QuasiErgodicReport quasi_ergodic_check(const AbsorbedChain& chain, const SpectralTriple& triple, const Vector& mu,
                                       const Vector& f, const std::vector<double>& t_grid, std::size_t n_replicas,
                                       ConditioningMethod method, const SamplingOptions& options) {
    QuasiErgodicReport report;
    SamplingOptions opts = options;
    opts.allow_degenerate = true;
    const QProcessChain q = h_transform(chain, triple);
    const AdditiveObservable obs = make_observable(f, q.beta);
    std::vector<double> ts, mc, exact;
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        const double t = t_grid[j];
        const EmpiricalDistribution sample = conditional_clt_sample(chain, triple, mu, f, t, n_replicas, method,
                                                                    opts, static_cast<std::uint64_t>(j) << 40);
        QuasiErgodicRow row;
        row.t = t;
        row.method = sample.method;
        row.n_effective = sample.n_effective;
        // sample = S_t / sqrt(t), so (S_t / t)^2 = sample^2 / t.
        double sum = 0.0, sum_sq = 0.0;
        for (double s : sample.samples) {
            const double v = s * s / t;
            sum += v;
            sum_sq += v * v;
        }
        const double n = static_cast<double>(sample.n_effective);
        row.mean_square = sum / n;
        const double var = n > 1 ? std::max(sum_sq / n - row.mean_square * row.mean_square, 0.0) * n / (n - 1) : 0.0;
        row.standard_error = std::sqrt(var / n);
        row.exact = chain.size() <= 50
                        ? exact_conditional_moments(chain, mu, obs.centered, 2, t).conditional[2] / (t * t)
                        : std::numeric_limits<double>::quiet_NaN();
        ts.push_back(t);
        mc.push_back(row.mean_square);
        exact.push_back(row.exact);
        report.rows.push_back(row);
    }
    report.fitted_slope = fit_loglog_slope(ts, mc);
    report.exact_fitted_slope = chain.size() <= 50 ? fit_loglog_slope(ts, exact)
                                                   : std::numeric_limits<double>::quiet_NaN();
    return report;
}

}  // namespace qsd
