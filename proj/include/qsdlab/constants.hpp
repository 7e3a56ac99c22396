#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

// Constant sequences of the even/odd moment bounds. Templated on the scalar so
// the identities between closed forms and recursions can be checked in exact
// rational arithmetic as well as in double.

namespace qsd::constants {

template <class R>
R factorial(std::size_t k) {
    R out(1);
    for (std::size_t i = 2; i <= k; ++i) out *= R(static_cast<long long>(i));
    return out;
}

/// 1/(k-1)! with the convention 1/(-1)! = 0 (k = 0).
template <class R>
R inverse_factorial_shifted(std::size_t k) {
    if (k == 0) return R(0);
    return R(1) / factorial<R>(k - 1);
}

template <class R>
R integer_power(R base, std::size_t e) {
    R out(1);
    for (std::size_t i = 0; i < e; ++i) out *= base;
    return out;
}

template <class R>
R max_of(const R& a, const R& b) {
    return a < b ? b : a;
}

/// D_1 = C^2/c  v  C beta(psi) / (c^2 gamma).
template <class R>
R d_first(R C, R gamma, R c, R beta_psi) {
    return max_of<R>(C * C / c, C * beta_psi / (c * c * gamma));
}

/// Growth ratio C/gamma (1 + beta(psi)/c) of the D_k sequence.
template <class R>
R d_ratio(R C, R gamma, R c, R beta_psi) {
    return C / gamma * (R(1) + beta_psi / c);
}

/// D_k = (ratio^{k-1} v 1) D_1, k >= 1.
template <class R>
R d_closed(std::size_t k, R C, R gamma, R c, R beta_psi) {
    if (k == 0) throw std::invalid_argument("D_k is defined for k >= 1");
    return max_of<R>(integer_power(d_ratio(C, gamma, c, beta_psi), k - 1), R(1)) *
           d_first(C, gamma, c, beta_psi);
}

/// D_1, ..., D_K from D_k = (D_{k-1} ratio) v D_1.
template <class R>
std::vector<R> d_recursive(std::size_t K, R C, R gamma, R c, R beta_psi) {
    std::vector<R> d;
    if (K == 0) return d;
    const R first = d_first(C, gamma, c, beta_psi);
    const R ratio = d_ratio(C, gamma, c, beta_psi);
    d.push_back(first);
    for (std::size_t k = 2; k <= K; ++k) d.push_back(max_of<R>(d.back() * ratio, first));
    return d;
}

/// C_1 = int_0^inf (s + 1) e^{-gamma s} ds = 1/gamma + 1/gamma^2.
template <class R>
R c_first(R gamma) {
    return R(1) / gamma + R(1) / (gamma * gamma);
}

/// C_k = C_1/(k-1)! + C_1/(k-2)! for k >= 2, C_1 for k = 1.
template <class R>
R c_closed(std::size_t k, R gamma) {
    if (k == 0) throw std::invalid_argument("C_k is defined for k >= 1");
    const R c1 = c_first(gamma);
    if (k == 1) return c1;
    return c1 / factorial<R>(k - 1) + c1 / factorial<R>(k - 2);
}

/// C_1, ..., C_K from C_k = C_{k-1}/(k-1) + C_1/(k-1)!.
template <class R>
std::vector<R> c_recursive(std::size_t K, R gamma) {
    std::vector<R> out;
    if (K == 0) return out;
    const R c1 = c_first(gamma);
    out.push_back(c1);
    for (std::size_t k = 2; k <= K; ++k) {
        out.push_back(out.back() / R(static_cast<long long>(k - 1)) + c1 / factorial<R>(k - 1));
    }
    return out;
}

/// C_1 k/(k-1)!, the form in which C_k enters the even-moment bound.
template <class R>
R c_via_first(std::size_t k, R gamma) {
    return c_first(gamma) * R(static_cast<long long>(k)) * inverse_factorial_shifted<R>(k);
}

/// (2k)! D_k C_1 k/(k-1)!: coefficient of mu(psi)/t in the even-moment error.
template <class R>
R even_moment_coefficient(std::size_t k, R C, R gamma, R c, R beta_psi) {
    return factorial<R>(2 * k) * d_closed(k, C, gamma, c, beta_psi) * c_via_first(k, gamma);
}

/// D_k [(2k+1)!/(2^k k!) + (2k+1)/(k-1)!]: odd-moment coefficient up to the
/// unspecified prefactor. D_1 is used for k = 0.
template <class R>
R odd_moment_coefficient(std::size_t k, R C, R gamma, R c, R beta_psi) {
    const R d = d_closed(k == 0 ? 1 : k, C, gamma, c, beta_psi);
    const R two_k = integer_power(R(2), k);
    return d * (factorial<R>(2 * k + 1) / (two_k * factorial<R>(k)) +
                R(static_cast<long long>(2 * k + 1)) * inverse_factorial_shifted<R>(k));
}

}  // namespace qsd::constants
