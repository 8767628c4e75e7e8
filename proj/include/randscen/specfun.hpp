#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace randscen::specfun {

// Natural log of a probability or of a positive weight. -inf encodes zero.
struct LogProb {
    double value = -std::numeric_limits<double>::infinity();

    static LogProb zero() { return {}; }
    static LogProb one() { return {0.0}; }
    double prob() const { return std::exp(value); }
    bool is_zero() const { return value == -std::numeric_limits<double>::infinity(); }
};

double log_factorial(std::int64_t n);

// ln C(N, k); -inf when k is outside [0, N].
double log_binomial_coeff(std::int64_t N, std::int64_t k);

// ln B(a, b) for integer a, b >= 1.
double log_beta(std::int64_t a, std::int64_t b);

// Binomial pmf P{X = k}, X ~ Bin(N, p), via the saddle-point (Loader) form.
double binom_pmf(std::int64_t k, std::int64_t N, double p);
double log_binom_pmf(std::int64_t k, std::int64_t N, double p);

// Phi(n; N, p) = P{X <= n}.
double binom_cdf(std::int64_t n, std::int64_t N, double p);

// P{X > n}, accurate in the far upper tail.
double binom_sf(std::int64_t n, std::int64_t N, double p);

// ln Phi(n; N, p), relatively accurate even where Phi underflows.
LogProb log_binom_cdf(std::int64_t n, std::int64_t N, double p);

// Explicit evaluation routes, exposed for cross-checking.
double binom_cdf_by_summation(std::int64_t n, std::int64_t N, double p);
double binom_cdf_by_beta(std::int64_t n, std::int64_t N, double p);

// Regularized incomplete beta I_x(a, b) for integer a, b >= 1 (continued fraction).
double incomplete_beta_reg(std::int64_t a, std::int64_t b, double x);

// eps in [0,1] with Phi(n; N, 1 - eps) = target.
double binom_cdf_inv_eps(std::int64_t n, std::int64_t N, double target);

// Largest N for which binom_cdf uses direct summation.
inline constexpr std::int64_t kSummationCrossover = 10000;

}  // namespace randscen::specfun
