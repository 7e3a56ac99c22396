#include "qsdlab/spectral.hpp"

#include "qsdlab/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qsd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Inverse iteration on (L + (lambda0 - delta) I) and its transpose. The
// leading eigenvector is amplified by roughly gap / delta per step.
void refine_eigenvectors(const Matrix& l, double lambda0, double gap, Vector& alpha, Vector& eta) {
    const Eigen::Index n = l.rows();
    const double scale = std::max(inf_norm(l), 1.0);
    double delta = std::min(1e-8 * scale, 1e-3 * gap);
    delta = std::max(delta, 1e-13 * scale);
    const Matrix shifted = l + (lambda0 - delta) * Matrix::Identity(n, n);
    const Eigen::PartialPivLU<Matrix> right(shifted);
    const Eigen::PartialPivLU<Matrix> left(shifted.transpose());
    for (int it = 0; it < 3; ++it) {
        eta = right.solve(eta);
        eta /= eta.cwiseAbs().maxCoeff();
        alpha = left.solve(alpha);
        alpha /= alpha.cwiseAbs().maxCoeff();
    }
}

void normalize(const Matrix& l, SpectralTriple& s) {
    if (s.alpha.sum() < 0.0) s.alpha = -s.alpha;
    s.alpha /= s.alpha.sum();
    if (s.eta.sum() < 0.0) s.eta = -s.eta;
    s.eta /= s.alpha.dot(s.eta);
    // Rayleigh quotient with both eigenvectors.
    s.lambda0 = -s.alpha.dot(l * s.eta) / s.alpha.dot(s.eta);
    s.right_residual = (l * s.eta + s.lambda0 * s.eta).cwiseAbs().maxCoeff();
    s.left_residual = (l.transpose() * s.alpha + s.lambda0 * s.alpha).cwiseAbs().maxCoeff();
}

SpectralTriple solve_dense(const Matrix& l) {
    const Eigen::Index n = l.rows();
    SpectralTriple s;
    if (n == 1) {
        s.lambda0 = -l(0, 0);
        s.alpha = Vector::Ones(1);
        s.eta = Vector::Ones(1);
        s.gamma = kInf;
        normalize(l, s);
        return s;
    }
    const Eigen::EigenSolver<Matrix> solver(l, /*computeEigenvectors=*/false);
    const auto& ev = solver.eigenvalues();
    Eigen::Index top = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
        if (ev(i).real() > ev(top).real()) top = i;
    }
    double second = -kInf;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i != top) second = std::max(second, ev(i).real());
    }
    const double lambda0 = -ev(top).real();
    s.gamma = -second - lambda0;
    s.alpha = Vector::Ones(n);
    s.eta = Vector::Ones(n);
    refine_eigenvectors(l, lambda0, std::max(s.gamma, 0.0) + 1e-300, s.alpha, s.eta);
    s.lambda0 = lambda0;
    normalize(l, s);
    return s;
}

SpectralTriple solve_power(const Matrix& l, const SpectralOptions& options) {
    const Eigen::Index n = l.rows();
    const double uniform_rate = 2.0 * (-l.diagonal()).maxCoeff();
    const Matrix p = Matrix::Identity(n, n) + l / uniform_rate;

    auto iterate = [&](const Matrix& op, Vector v) {
        for (std::size_t it = 0; it < options.max_power_iterations; ++it) {
            Vector next = op * v;
            next /= next.norm();
            const double change = (next - v).cwiseAbs().maxCoeff();
            v = std::move(next);
            if (change < options.power_tolerance) break;
        }
        return v;
    };

    SpectralTriple s;
    s.eta = iterate(p, Vector::Ones(n) / std::sqrt(static_cast<double>(n)));
    s.alpha = iterate(p.transpose(), Vector::Ones(n) / std::sqrt(static_cast<double>(n)));
    normalize(l, s);

    // Deflated orthogonal iteration: project out the leading right eigenvector
    // along alpha, then read the subleading spectrum off Rayleigh-Ritz values.
    // A single vector is not enough once the subleading pair is complex.
    auto project = [&](Matrix& v) { v -= s.eta * (s.alpha.transpose() * v); };
    const Eigen::Index m = std::min<Eigen::Index>(n - 1, 6);
    if (m == 0) {
        s.gamma = kInf;
        return s;
    }
    Matrix basis(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) basis(i, j) = std::cos(1.0 + 0.7 * static_cast<double>(i) * (j + 1));
    }
    project(basis);
    auto orthonormalize = [&](const Matrix& v) {
        Eigen::HouseholderQR<Matrix> qr(v);
        return Matrix(qr.householderQ() * Matrix::Identity(n, m));
    };
    basis = orthonormalize(basis);
    constexpr int kWindow = 20;
    double best_real = -kInf;
    for (std::size_t it = 0; it < options.max_power_iterations; it += kWindow) {
        for (int j = 0; j < kWindow; ++j) {
            Matrix next = p * basis;
            project(next);
            basis = orthonormalize(next);
        }
        Matrix image = p * basis;
        project(image);
        const Matrix ritz = basis.transpose() * image;
        const Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(ritz, false).eigenvalues();
        double real = -kInf;
        for (Eigen::Index i = 0; i < ev.size(); ++i) real = std::max(real, ev(i).real());
        const bool settled = std::abs(real - best_real) < options.power_tolerance * 10.0;
        best_real = real;
        if (settled) break;
    }
    s.gamma = -uniform_rate * (best_real - 1.0) - s.lambda0;
    return s;
}

}  // namespace

SpectralTriple solve_spectral(const AbsorbedChain& chain, const SpectralOptions& options) {
    const Matrix& l = chain.generator();
    SpectralTriple s = chain.size() <= options.dense_limit ? solve_dense(l) : solve_power(l, options);
    const double scale = std::max(inf_norm(l), 1e-300);
    if (!(s.lambda0 > 1e-12 * scale)) {
        throw Error(ErrorKind::NoKilling, "leading decay rate lambda0 is not positive");
    }
    if (chain.size() > 1 && !(s.gamma >= 1e-8 * s.lambda0)) {
        throw Error(ErrorKind::DegenerateGap, "spectral gap " + std::to_string(s.gamma) +
                                                  " is below 1e-8 lambda0");
    }
    return s;
}

double weighted_norm(const Vector& signed_measure, const Vector& psi) {
    return signed_measure.cwiseAbs().dot(psi);
}

Matrix semigroup(const AbsorbedChain& chain, double t) { return expm(t * chain.generator()); }

ErgodicityCertificate certify_ergodicity(const AbsorbedChain& chain, const SpectralTriple& triple,
                                         const WeightFunction& psi1, std::vector<double> t_grid) {
    if (t_grid.empty()) throw Error(ErrorKind::InvalidArgument, "certification grid is empty");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0) || (i > 0 && !(t_grid[i] > t_grid[i - 1]))) {
            throw Error(ErrorKind::InvalidArgument, "certification grid must be nonnegative and increasing");
        }
    }
    if (t_grid.front() > 0.0) t_grid.insert(t_grid.begin(), 0.0);
    const auto n = static_cast<Eigen::Index>(chain.size());
    if (psi1.psi1.size() != n) throw Error(ErrorKind::InvalidArgument, "psi1 has the wrong size");

    ErgodicityCertificate cert;
    cert.gamma = triple.gamma;
    cert.psi1 = psi1;
    cert.t_grid = t_grid;
    cert.horizon_ok = std::isinf(triple.gamma) || t_grid.back() >= 5.0 / triple.gamma;
    const double rate = std::isinf(triple.gamma) ? 0.0 : triple.gamma;

    for (double t : t_grid) {
        const Matrix pt = std::exp(triple.lambda0 * t) * semigroup(chain, t);
        for (Eigen::Index x = 0; x < n; ++x) {
            const Vector deviation = pt.row(x).transpose() - triple.eta(x) * triple.alpha;
            const double ratio = std::exp(rate * t) * weighted_norm(deviation, psi1.psi1) / psi1.psi1(x);
            if (ratio > cert.worst_ratio) {
                cert.worst_ratio = ratio;
                cert.worst_t = t;
                cert.worst_state = static_cast<std::size_t>(x);
            }
        }
    }
    cert.C = cert.slack * cert.worst_ratio;
    return cert;
}

std::vector<double> default_certification_grid(double gamma) {
    std::vector<double> grid{0.0};
    if (std::isinf(gamma)) return grid;
    for (int j = 8; j >= 0; --j) grid.push_back((8.0 / gamma) * std::ldexp(1.0, -j));
    return grid;
}

}  // namespace qsd
