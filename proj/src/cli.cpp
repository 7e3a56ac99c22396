#include "qsdlab/cli.hpp"

#include "qsdlab/error.hpp"
#include "qsdlab/model_io.hpp"
#include "qsdlab/montecarlo.hpp"
#include "qsdlab/qprocess.hpp"
#include "qsdlab/report.hpp"
#include "qsdlab/spectral.hpp"
#include "qsdlab/variance_clt.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace qsd::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string model;
    std::string out;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::vector<double> t;
    double T = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> omega;
    std::size_t n = 10000;
    std::size_t k = 3;
    std::string method = "auto";
    bool samples = false;
    std::string manifest;
};

std::string join(const std::vector<double>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ' ';
        s += format_double(values[i]);
    }
    return s;
}

std::string str(double v) { return format_double(v); }
std::string str(std::size_t v) { return std::to_string(v); }
std::string str(bool v) { return v ? "true" : "false"; }

std::vector<double> or_default(const std::vector<double>& given, std::vector<double> fallback) {
    return given.empty() ? fallback : given;
}

void check_times(const std::vector<double>& ts, bool allow_zero) {
    for (double t : ts) {
        if (!std::isfinite(t) || t < 0.0 || (!allow_zero && t == 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "times must be finite and positive");
        }
    }
}

// A report, its file name inside the output directory, and side files.
struct Output {
    std::string name;
    CsvReport csv;
    std::vector<std::pair<std::string, std::string>> extra_files;
};

struct Context {
    const Options& opts;
    ModelBundle bundle;
    std::map<std::string, std::string> params;
    mutable std::optional<SpectralTriple> triple_cache;
    mutable std::optional<ErgodicityCertificate> cert_cache;
    mutable std::optional<QProcessChain> q_cache;

    const SpectralTriple& triple() const {
        if (!triple_cache) triple_cache = solve_spectral(bundle.chain);
        return *triple_cache;
    }
    const ErgodicityCertificate& cert() const {
        if (!cert_cache) {
            cert_cache = certify_ergodicity(bundle.chain, triple(), bundle.weight,
                                            default_certification_grid(triple().gamma));
        }
        return *cert_cache;
    }
    const QProcessChain& q() const {
        if (!q_cache) q_cache = h_transform(bundle.chain, triple(), bundle.weight);
        return *q_cache;
    }
    AdditiveObservable observable() const { return make_observable(bundle.observable, q().beta); }
    double sigma2_checked() const {
        const double s = sigma2_poisson(q(), observable()).sigma2;
        if (s <= 1e-12) throw Error(ErrorKind::DegenerateVariance, "sigma^2 = " + str(s) + " vanishes");
        return s;
    }
};

Output spectral_output(Context& ctx) {
    const SpectralTriple& tr = ctx.triple();
    CsvReport csv({"object", "index", "value", "residual"});
    csv.add_metadata("residual_tolerance", 1e-10);
    csv.add_row({"lambda0", "", str(tr.lambda0), str(std::max(tr.left_residual, tr.right_residual))});
    csv.add_row({"gamma", "", str(tr.gamma), ""});
    for (Eigen::Index i = 0; i < tr.alpha.size(); ++i) {
        csv.add_row({"alpha", std::to_string(i), str(tr.alpha(i)), str(tr.left_residual)});
    }
    for (Eigen::Index i = 0; i < tr.eta.size(); ++i) {
        csv.add_row({"eta", std::to_string(i), str(tr.eta(i)), str(tr.right_residual)});
    }
    return {"spectral", csv, {}};
}

Output certify_output(Context& ctx) {
    const std::vector<double> grid = or_default(ctx.opts.t, default_certification_grid(ctx.triple().gamma));
    check_times(grid, true);
    ctx.params["t"] = join(grid);
    const ErgodicityCertificate cert =
        certify_ergodicity(ctx.bundle.chain, ctx.triple(), ctx.bundle.weight, grid);
    CsvReport csv({"quantity", "value"});
    csv.add_metadata("note", "C is grid-based: slack times the largest ratio observed on the grid");
    csv.add_row({"C", str(cert.C)});
    csv.add_row({"gamma", str(cert.gamma)});
    csv.add_row({"worst_ratio", str(cert.worst_ratio)});
    csv.add_row({"worst_t", str(cert.worst_t)});
    csv.add_row({"worst_state", str(cert.worst_state)});
    csv.add_row({"slack", str(cert.slack)});
    csv.add_row({"horizon_ok", str(cert.horizon_ok)});
    csv.add_row({"grid_points", str(cert.t_grid.size())});
    return {"certify", csv, {}};
}

Output qprocess_output(Context& ctx) {
    const double t = ctx.opts.t.empty() ? 1.0 : ctx.opts.t.front();
    const double T = std::isnan(ctx.opts.T) ? t + 4.0 : ctx.opts.T;
    check_times({t, T}, true);
    if (T < t) throw Error(ErrorKind::InvalidArgument, "--T must be at least --t");
    ctx.params["t"] = str(t);
    ctx.params["T"] = str(T);
    std::vector<double> offsets;
    for (int j = 0; j <= 6; ++j) offsets.push_back((T - t) * j / 6.0);
    const ConditionalGapSweep sweep =
        sweep_conditional_gap(ctx.bundle.chain, ctx.triple(), ctx.cert(), ctx.bundle.initial.mu, t, offsets);
    CsvReport csv({"t", "T", "tv_gap", "l1_gap", "bound", "bound_rate", "threshold", "threshold_ok"});
    csv.add_metadata("lambda0", ctx.triple().lambda0);
    csv.add_metadata("gamma", ctx.triple().gamma);
    csv.add_metadata("fitted_rate", sweep.fitted_rate);
    csv.add_metadata("fitted_prefactor", sweep.prefactor);
    csv.add_metadata("reversible", str(is_reversible(ctx.q())));
    csv.add_metadata("tv_convention", "tv_gap = l1_gap / 2");
    for (const auto& r : sweep.rows) {
        csv.add_row({str(r.t), str(r.T), str(r.tv_gap), str(r.l1_gap), str(r.bound), str(ctx.triple().gamma),
                     str(r.threshold), str(r.threshold_ok)});
    }
    return {"qprocess", csv, {}};
}

Output variance_output(Context& ctx) {
    const AdditiveObservable obs = ctx.observable();
    const VarianceResult v = sigma2_with_oracle(ctx.q(), obs, ctx.cert().C);
    CsvReport csv({"quantity", "value"});
    csv.add_metadata("negative_clamp", 1e-12);
    csv.add_row({"beta_f", str(obs.beta_f)});
    csv.add_row({"sigma2", str(v.sigma2)});
    csv.add_row({"quadrature_value", str(v.quadrature_value)});
    csv.add_row({"quadrature_error_bound", str(v.quadrature_error_bound)});
    csv.add_row({"quadrature_truncation_bound", str(v.quadrature_truncation_bound)});
    csv.add_row({"oracle_difference", str(std::abs(v.sigma2 - v.quadrature_value))});
    csv.add_row({"horizon", str(v.horizon)});
    csv.add_row({"step", str(v.step)});
    return {"variance", csv, {}};
}

Output moments_output(Context& ctx) {
    const std::vector<double> grid = or_default(ctx.opts.t, {20.0, 40.0, 80.0, 160.0});
    check_times(grid, false);
    const std::size_t K = ctx.opts.k;
    if (K < 1 || 2 * K + 1 > kMaxMomentOrder + 1) {
        throw Error(ErrorKind::InvalidArgument, "--k must lie in 1..4");
    }
    ctx.params["t"] = join(grid);
    ctx.params["k"] = str(K);
    const double sigma2 = ctx.sigma2_checked();
    const AdditiveObservable obs = ctx.observable();
    const ConstantsTable table = constants_table(ctx.cert(), ctx.q(), K);
    const Vector& mu = ctx.bundle.initial.mu;
    CsvReport csv({"kind", "k", "t", "value", "limit", "error", "bound"});
    csv.add_metadata("sigma2", sigma2);
    csv.add_metadata("C", table.C);
    csv.add_metadata("gamma", table.gamma);
    csv.add_metadata("c", table.c);
    csv.add_metadata("beta_psi", table.beta_psi);
    for (std::size_t k = 1; k <= K; ++k) {
        csv.add_metadata("D_" + std::to_string(k), table.D[k - 1]);
        csv.add_metadata("C_" + std::to_string(k), table.Ck[k - 1]);
    }
    const std::string nan = "nan";
    for (std::size_t k = 1; k <= K; ++k) {
        const MomentReport q = check_even_moment_limit(ctx.q(), mu, obs, sigma2, k, grid, &table);
        csv.add_metadata("even_q_slope_" + std::to_string(k), q.fitted_slope);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            csv.add_row({"even_q", str(k), str(grid[i]), str(q.values[i]), str(q.limit), str(q.errors[i]),
                         str(q.bounds[i])});
        }
        const MomentReport c = check_even_moment_limit(ctx.bundle.chain, mu, obs, sigma2, k, grid);
        csv.add_metadata("even_conditional_slope_" + std::to_string(k), c.fitted_slope);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            csv.add_row({"even_conditional", str(k), str(grid[i]), str(c.values[i]), str(c.limit),
                         str(c.errors[i]), nan});
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        const OddMomentReport o = check_odd_moment_decay(ctx.q(), mu, obs, k, grid, table);
        csv.add_metadata("odd_slope_" + std::to_string(k), o.fitted_slope);
        csv.add_metadata("odd_prefactor_" + std::to_string(k), o.fitted_prefactor);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            csv.add_row({"odd_q", str(k), str(grid[i]), str(o.values[i]), "0", str(std::abs(o.values[i])),
                         str(o.coefficient * mu.dot(ctx.q().psi) / std::sqrt(grid[i]))});
        }
    }
    return {"moments", csv, {}};
}

Output charfun_output(Context& ctx) {
    const std::vector<double> grid = or_default(ctx.opts.t, {10.0, 40.0, 160.0});
    const std::vector<double> omegas = or_default(ctx.opts.omega, {0.5, 1.0, 2.0});
    check_times(grid, false);
    ctx.params["t"] = join(grid);
    ctx.params["omega"] = join(omegas);
    const double sigma2 = ctx.sigma2_checked();
    const AdditiveObservable obs = ctx.observable();
    const Vector& mu = ctx.bundle.initial.mu;
    const Vector q_mu = eta_reweighted(mu, ctx.q().eta);
    const auto ball = g_ball_samples(ctx.q().psi, 16, ctx.opts.seed);
    CsvReport csv({"omega", "t", "conditional_re", "conditional_im", "q_re", "q_im", "gaussian",
                   "conditional_error", "coupling_sup", "bound", "within_bound", "limit_sup"});
    csv.add_metadata("sigma2", sigma2);
    csv.add_metadata("C", ctx.cert().C);
    csv.add_metadata("gamma", ctx.cert().gamma);
    csv.add_metadata("monotone_slack", 1.1);
    for (double omega : omegas) {
        const UniformCharfunReport rep =
            check_uniform_charfun_bound(ctx.q(), ctx.cert(), mu, obs, sigma2, omega, grid, ball);
        csv.add_metadata("limit_monotone_omega_" + str(omega), str(rep.limit_monotone));
        const double gaussian = std::exp(-sigma2 * omega * omega / 2.0);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto cond = exact_conditional_charfun(ctx.bundle.chain, mu, obs.centered, omega, grid[i]);
            const auto qv = q_charfun(ctx.q(), q_mu, obs.centered, omega, grid[i]);
            const auto& row = rep.rows[i];
            csv.add_row({str(omega), str(grid[i]), str(cond.real()), str(cond.imag()), str(qv.real()),
                         str(qv.imag()), str(gaussian), str(std::abs(cond - gaussian)), str(row.coupling_sup),
                         str(row.bound), str(row.within_bound), str(row.limit_sup)});
        }
    }
    return {"charfun", csv, {}};
}

SamplingOptions sampling(const Context& ctx) {
    SamplingOptions s;
    s.seed = ctx.opts.seed;
    s.threads = ctx.opts.threads;
    return s;
}

Output clt_output(Context& ctx) {
    const std::vector<double> grid = or_default(ctx.opts.t, {200.0});
    check_times(grid, false);
    const ConditioningMethod method = parse_method(ctx.opts.method);
    ctx.params["t"] = join(grid);
    ctx.params["n"] = str(ctx.opts.n);
    ctx.params["method"] = ctx.opts.method;
    ctx.params["samples"] = str(ctx.opts.samples);
    CsvReport csv({"t", "n_eff", "d_kolm", "sigma2", "method", "gap_bound", "attempts"});
    csv.add_metadata("rng", "philox4x32-10, replica i of grid point j on stream j*2^40+i");
    Output output{"clt", csv, {}};
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const EmpiricalDistribution e =
            conditional_clt_sample(ctx.bundle.chain, ctx.triple(), ctx.bundle.initial.mu, ctx.bundle.observable,
                                   grid[j], ctx.opts.n, method, sampling(ctx), static_cast<std::uint64_t>(j) << 40);
        output.csv.add_row({str(grid[j]), str(e.n_effective), str(kolmogorov_distance(e, e.sigma2)),
                            str(e.sigma2), to_string(e.method), str(e.gap_bound), std::to_string(e.attempts)});
        if (ctx.opts.samples) {
            std::string text;
            for (double s : e.samples) text += format_double(s) + "\n";
            output.extra_files.emplace_back("clt_samples_" + std::to_string(j) + ".txt", std::move(text));
        }
    }
    return output;
}

Output qed_output(Context& ctx) {
    const std::vector<double> grid = or_default(ctx.opts.t, {10.0, 20.0, 40.0, 80.0});
    check_times(grid, false);
    const ConditioningMethod method = parse_method(ctx.opts.method);
    ctx.params["t"] = join(grid);
    ctx.params["n"] = str(ctx.opts.n);
    ctx.params["method"] = ctx.opts.method;
    const QuasiErgodicReport rep = quasi_ergodic_check(ctx.bundle.chain, ctx.triple(), ctx.bundle.initial.mu,
                                                       ctx.bundle.observable, grid, ctx.opts.n, method,
                                                       sampling(ctx));
    CsvReport csv({"t", "method", "n_eff", "mean_square", "standard_error", "exact"});
    csv.add_metadata("fitted_slope", rep.fitted_slope);
    csv.add_metadata("exact_fitted_slope", rep.exact_fitted_slope);
    for (const auto& r : rep.rows) {
        csv.add_row({str(r.t), to_string(r.method), str(r.n_effective), str(r.mean_square), str(r.standard_error),
                     str(r.exact)});
    }
    return {"qed", csv, {}};
}

using Producer = std::function<Output(Context&)>;

const std::vector<std::pair<std::string, Producer>>& producers() {
    static const std::vector<std::pair<std::string, Producer>> table = {
        {"spectral", spectral_output}, {"certify", certify_output}, {"qprocess", qprocess_output},
        {"variance", variance_output}, {"moments", moments_output}, {"charfun", charfun_output},
        {"clt", clt_output},           {"qed", qed_output},
    };
    return table;
}

int execute(const std::string& subcommand, const Options& opts, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    Context ctx{opts, resolve_model(opts.model), {}, {}, {}, {}};
    std::vector<Output> outputs;
    if (subcommand == "all") {
        if (opts.out.empty()) throw Error(ErrorKind::InvalidArgument, "all requires --out DIR");
        ctx.params["n"] = str(opts.n);
        for (const auto& [name, produce] : producers()) {
            // Each stage uses its own defaults; record them under a prefix.
            Context stage{ctx.opts, ctx.bundle, {}, ctx.triple_cache, ctx.cert_cache, ctx.q_cache};
            outputs.push_back(produce(stage));
            for (const auto& [key, value] : stage.params) ctx.params[name + "." + key] = value;
            ctx.triple_cache = stage.triple_cache;
            ctx.cert_cache = stage.cert_cache;
            ctx.q_cache = stage.q_cache;
        }
    } else {
        for (const auto& [name, produce] : producers()) {
            if (name == subcommand) outputs.push_back(produce(ctx));
        }
    }
    if (opts.samples && opts.out.empty()) throw Error(ErrorKind::InvalidArgument, "--samples requires --out");

    RunManifest manifest;
    manifest.subcommand = subcommand;
    manifest.model = opts.model;
    manifest.model_digest = fnv1a_hex(emit_model_config(ctx.bundle));
    manifest.parameters = ctx.params;
    manifest.seed = opts.seed;
    manifest.threads = opts.threads;
    const std::string hash = manifest.hash();

    if (opts.out.empty()) {
        for (const auto& o : outputs) out << o.csv.render(hash);
        return kExitOk;
    }
    const fs::path target(opts.out);
    const bool single_file = target.extension() == ".csv" && outputs.size() == 1;
    const fs::path dir = single_file ? target.parent_path() : target;
    fs::path manifest_path = dir / "manifest.json";
    for (const auto& o : outputs) {
        const fs::path p = single_file ? target : dir / (o.name + ".csv");
        write_text_file(p, o.csv.render(hash));
        manifest.outputs.push_back(p.filename().string());
        for (const auto& [file, text] : o.extra_files) {
            write_text_file(dir / file, text);
            manifest.outputs.push_back(file);
        }
    }
    if (single_file) manifest_path = fs::path(target).replace_extension(".manifest.json");
    manifest.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text_file(manifest_path, manifest.to_json());
    return kExitOk;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> values;
    std::istringstream in(text);
    std::string token;
    while (in >> token) values.push_back(std::stod(token));
    return values;
}

// Rebuilds the options of a recorded run; --out and --threads may be overridden.
Options options_from_manifest(const RunManifest& m, const Options& overrides) {
    Options o;
    o.model = m.model;
    o.seed = m.seed;
    o.threads = overrides.threads;
    o.out = overrides.out;
    auto get = [&](const std::string& key) -> const std::string* {
        const auto it = m.parameters.find(key);
        return it == m.parameters.end() ? nullptr : &it->second;
    };
    if (m.subcommand != "all") {
        if (auto v = get("t")) o.t = parse_list(*v);
        if (auto v = get("omega")) o.omega = parse_list(*v);
    }
    if (auto v = get("T")) o.T = std::stod(*v);
    if (auto v = get("n")) o.n = std::stoull(*v);
    if (auto v = get("k")) o.k = std::stoull(*v);
    if (auto v = get("method")) o.method = *v;
    if (auto v = get("samples")) o.samples = *v == "true";
    if (m.subcommand == "all") {
        if (auto v = get("clt.samples")) o.samples = *v == "true";
        if (auto v = get("clt.method")) o.method = *v;
    }
    return o;
}

std::string single_line(std::string s) {
    for (char& ch : s) {
        if (ch == '\n' || ch == '\r') ch = ' ';
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

int exit_code(ErrorKind kind) {
    if (kind == ErrorKind::InvalidArgument) return kExitUsage;
    return is_numerical(kind) ? kExitNumerical : kExitValidation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quasi-stationary analysis of absorbed finite Markov chains", "qsdlab"};
    app.require_subcommand(1);
    Options opts;

    auto common = [&](CLI::App* sub, bool model_required = true) {
        auto* m = sub->add_option("--model", opts.model, "fixture name (m2sym, m2asym, bd5) or model file");
        if (model_required) m->required();
        sub->add_option("--out", opts.out, "output directory, or a .csv file for single reports");
        sub->add_option("--seed", opts.seed, "master seed");
        sub->add_option("--threads", opts.threads, "worker threads, 0 = hardware concurrency");
    };
    auto times = [&](CLI::App* sub, const std::string& help) { sub->add_option("--t", opts.t, help); };
    auto sampling_flags = [&](CLI::App* sub) {
        sub->add_option("--n", opts.n, "replicas per time point")->check(CLI::PositiveNumber);
        sub->add_option("--method", opts.method, "auto, rejection or qprocess")
            ->check(CLI::IsMember({"auto", "rejection", "qprocess"}));
    };

    auto* spectral = app.add_subcommand("spectral", "leading eigen-objects");
    common(spectral);
    auto* certify = app.add_subcommand("certify", "grid estimate of the ergodicity constants");
    common(certify);
    times(certify, "certification grid (default: 0 and geometric points up to 8/gamma)");
    auto* qprocess = app.add_subcommand("qprocess", "conditional law against the Q-process");
    common(qprocess);
    times(qprocess, "observation time (first value used)");
    qprocess->add_option("--T", opts.T, "conditioning horizon, T >= t");
    auto* variance = app.add_subcommand("variance", "asymptotic variance");
    common(variance);
    auto* moments = app.add_subcommand("moments", "even and odd moment checks");
    common(moments);
    times(moments, "time grid");
    moments->add_option("--k", opts.k, "largest k (1..4)");
    auto* charfun = app.add_subcommand("charfun", "characteristic function checks");
    common(charfun);
    times(charfun, "time grid");
    charfun->add_option("--omega", opts.omega, "frequencies");
    auto* clt = app.add_subcommand("clt", "Monte Carlo CLT sample");
    common(clt);
    times(clt, "times");
    sampling_flags(clt);
    clt->add_flag("--samples", opts.samples, "also write one-value-per-line sample files");
    auto* qed = app.add_subcommand("qed", "conditional mean-square deviation of time averages");
    common(qed);
    times(qed, "times");
    sampling_flags(qed);
    auto* all = app.add_subcommand("all", "every report on one model");
    common(all);
    sampling_flags(all);
    auto* replay = app.add_subcommand("replay", "re-run a manifest");
    replay->add_option("--manifest", opts.manifest, "manifest.json of an earlier run")->required();
    replay->add_option("--out", opts.out, "output location (default: next to the manifest)");
    replay->add_option("--threads", opts.threads, "worker threads, 0 = hardware concurrency");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: Usage: " << single_line(e.what()) << "\n";
        return kExitUsage;
    }

    try {
        const CLI::App* chosen = app.get_subcommands().front();
        if (chosen == replay) {
            std::ifstream in(opts.manifest);
            if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read " + opts.manifest);
            std::stringstream buffer;
            buffer << in.rdbuf();
            const RunManifest m = RunManifest::from_json(buffer.str());
            Options overrides = opts;
            if (overrides.out.empty()) {
                const fs::path parent = fs::path(opts.manifest).parent_path();
                overrides.out = m.outputs.size() == 1 && fs::path(m.outputs[0]).extension() == ".csv" &&
                                        fs::path(opts.manifest).filename() != "manifest.json"
                                    ? (parent / m.outputs[0]).string()
                                    : parent.string();
            }
            return execute(m.subcommand, options_from_manifest(m, overrides), out);
        }
        return execute(chosen->get_name(), opts, out);
    } catch (const Error& e) {
        err << "error: " << to_string(e.kind()) << ": " << single_line(e.what()) << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "error: Internal: " << single_line(e.what()) << "\n";
        return 1;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace qsd::cli
