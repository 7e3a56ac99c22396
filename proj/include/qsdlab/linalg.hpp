#pragma once

#include <Eigen/Dense>

#include <complex>
#include <span>

namespace qsd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

// Matrix exponential by scaling and squaring with a degree-13 Pade
// approximant (Higham 2005); the number of squarings is chosen from the
// 1-norm of the argument. Throws OverflowGuard if the result is not finite.
Matrix expm(const Matrix& a);
ComplexMatrix expm(const ComplexMatrix& a);

template <class Derived>
auto expm(const Eigen::MatrixBase<Derived>& a) {
    return expm(typename Derived::PlainObject(a));
}

/// Row-sum (infinity) norm.
double inf_norm(const Matrix& a);

/// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

/// Slope of log|y| against log x. Entries with y == 0 are skipped.
double fit_loglog_slope(std::span<const double> x, std::span<const double> y);

/// Slope of log|y| against x. Entries with y == 0 are skipped.
double fit_semilog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace qsd
