#include "qsdlab/linalg.hpp"

#include "qsdlab/error.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <limits>
#include <vector>

namespace qsd {

namespace {

template <class M>
M checked_expm(const M& a) {
    M result = a.exp();
    if (!result.allFinite()) {
        throw Error(ErrorKind::OverflowGuard,
                    "matrix exponential overflowed (1-norm " +
                        std::to_string(a.cwiseAbs().colwise().sum().maxCoeff()) + ")");
    }
    return result;
}

}  // namespace

Matrix expm(const Matrix& a) { return checked_expm(a); }

ComplexMatrix expm(const ComplexMatrix& a) { return checked_expm(a); }

double inf_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    return a.cwiseAbs().rowwise().sum().maxCoeff();
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / sxx;
}

double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (y[i] == 0.0 || x[i] <= 0.0) continue;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(std::abs(y[i])));
    }
    return fit_slope(lx, ly);
}

double fit_semilog_slope(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (y[i] == 0.0) continue;
        lx.push_back(x[i]);
        ly.push_back(std::log(std::abs(y[i])));
    }
    return fit_slope(lx, ly);
}

}  // namespace qsd
