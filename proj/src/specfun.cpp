#include "randscen/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "randscen/errors.hpp"

namespace randscen::specfun {

namespace {

constexpr double kLnSqrt2Pi = 0.918938533204672741780329736406;
constexpr double kLn2Pi = 1.837877066409345483560659472811;
constexpr std::int64_t kTableSize = std::int64_t{1} << 20;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// ln n! for n <= 20 from the exact integer product.
double small_log_factorial(std::int64_t n) {
    double f = 1.0;
    for (std::int64_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
    return std::log(f);
}

// stirlerr(n) = ln n! - [(n + 1/2) ln n - n + ln sqrt(2 pi)].
double stirlerr(std::int64_t n) {
    constexpr double S0 = 1.0 / 12.0;
    constexpr double S1 = 1.0 / 360.0;
    constexpr double S2 = 1.0 / 1260.0;
    constexpr double S3 = 1.0 / 1680.0;
    constexpr double S4 = 1.0 / 1188.0;
    if (n <= 15) {
        const double x = static_cast<double>(n);
        return small_log_factorial(n) - (x + 0.5) * std::log(x) + x - kLnSqrt2Pi;
    }
    const double x = static_cast<double>(n);
    const double nn = x * x;
    if (n > 500) return (S0 - S1 / nn) / x;
    if (n > 80) return (S0 - (S1 - S2 / nn) / nn) / x;
    if (n > 35) return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / x;
    return (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / x;
}

double log_factorial_formula(std::int64_t n) {
    if (n <= 20) return small_log_factorial(n);
    const double x = static_cast<double>(n);
    return (x + 0.5) * std::log(x) - x + kLnSqrt2Pi + stirlerr(n);
}

const std::vector<double>& factorial_table() {
    static const std::vector<double> table = [] {
        std::vector<double> t(static_cast<std::size_t>(kTableSize));
        for (std::int64_t i = 0; i < kTableSize; ++i) t[static_cast<std::size_t>(i)] = log_factorial_formula(i);
        return t;
    }();
    return table;
}

// Deviance term x ln(x/np) + np - x, stable when x is close to np.
double bd0(double x, double np) {
    if (std::fabs(x - np) < 0.1 * (x + np)) {
        double v = (x - np) / (x + np);
        double s = (x - np) * v;
        double ej = 2.0 * x * v;
        v *= v;
        for (int j = 1; j < 1000; ++j) {
            ej *= v;
            const double s1 = s + ej / (2 * j + 1);
            if (s1 == s) return s1;
            s = s1;
        }
        return s;
    }
    return x * std::log(x / np) + np - x;
}

double log_dbinom_raw(std::int64_t x, std::int64_t n, double p, double q) {
    if (p == 0.0) return x == 0 ? 0.0 : kNegInf;
    if (q == 0.0) return x == n ? 0.0 : kNegInf;
    if (x < 0 || x > n) return kNegInf;
    const double dn = static_cast<double>(n);
    if (x == 0) {
        if (n == 0) return 0.0;
        return p < 0.1 ? -bd0(dn, dn * q) - dn * p : dn * std::log(q);
    }
    if (x == n) {
        return q < 0.1 ? -bd0(dn, dn * p) - dn * q : dn * std::log(p);
    }
    const double dx = static_cast<double>(x);
    const double lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(dx, dn * p) - bd0(dn - dx, dn * q);
    const double lf = kLn2Pi + std::log(dx) + std::log1p(-dx / dn);
    return lc - 0.5 * lf;
}

void check_prob(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError(std::string(what) + " must lie in [0,1], got " + std::to_string(p));
}

std::int64_t binom_mode(std::int64_t N, double p) {
    const double m = std::floor(static_cast<double>(N + 1) * p);
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(m), 0, N);
}

// sum_{i<=n} pmf(i) / pmf(n), for n below the mode (terms decrease going down).
double lower_relative_sum(std::int64_t n, std::int64_t N, double p, double q) {
    double s = 1.0;
    double t = 1.0;
    for (std::int64_t i = n; i > 0; --i) {
        t *= static_cast<double>(i) * q / (static_cast<double>(N - i + 1) * p);
        s += t;
        if (t < s * 1e-17) break;
    }
    return s;
}

// sum_{i>=k} pmf(i) / pmf(k), for k above the mode.
double upper_relative_sum(std::int64_t k, std::int64_t N, double p, double q) {
    double s = 1.0;
    double t = 1.0;
    for (std::int64_t i = k; i < N; ++i) {
        t *= static_cast<double>(N - i) * p / (static_cast<double>(i + 1) * q);
        s += t;
        if (t < s * 1e-17) break;
    }
    return s;
}

// Lentz continued fraction for I_x(a, b); needs x < (a+1)/(a+b+2).
double betacf(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    const int max_iter = 10000 + static_cast<int>(20.0 * std::sqrt(a + b));
    for (int m = 1; m <= max_iter; ++m) {
        const double dm = m;
        const double m2 = 2.0 * dm;
        double aa = dm * (b - dm) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + dm) * (qab + dm) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw SolverError("incomplete beta continued fraction did not converge");
}

// ln of x^a y^b / (a B(a,b)) with y = 1 - x, written as y * dbinom(a; a+b-1, x).
double log_beta_front(std::int64_t a, std::int64_t b, double x, double y) {
    return std::log(y) + log_dbinom_raw(a, a + b - 1, x, y);
}

struct BetaSplit {
    bool direct;  // true: I = v, false: I = 1 - v
    double log_v;
};

BetaSplit ibeta_parts(std::int64_t a, std::int64_t b, double x, double y) {
    const double da = static_cast<double>(a);
    const double db = static_cast<double>(b);
    if (x < (da + 1.0) / (da + db + 2.0)) {
        return {true, log_beta_front(a, b, x, y) + std::log(betacf(da, db, x))};
    }
    return {false, log_beta_front(b, a, y, x) + std::log(betacf(db, da, y))};
}

double ibeta_xy(std::int64_t a, std::int64_t b, double x, double y) {
    if (x <= 0.0) return 0.0;
    if (y <= 0.0) return 1.0;
    const BetaSplit s = ibeta_parts(a, b, x, y);
    const double v = std::exp(s.log_v);
    return std::clamp(s.direct ? v : 1.0 - v, 0.0, 1.0);
}

double log_ibeta_xy(std::int64_t a, std::int64_t b, double x, double y) {
    if (x <= 0.0) return kNegInf;
    if (y <= 0.0) return 0.0;
    const BetaSplit s = ibeta_parts(a, b, x, y);
    if (s.direct) return std::min(0.0, s.log_v);
    const double v = std::exp(s.log_v);
    return v >= 1.0 ? kNegInf : std::log1p(-v);
}

double cdf_sum(std::int64_t n, std::int64_t N, double p, double q) {
    const std::int64_t mode = binom_mode(N, p);
    if (n < mode) {
        return std::min(1.0, std::exp(log_dbinom_raw(n, N, p, q)) * lower_relative_sum(n, N, p, q));
    }
    const double tail = std::exp(log_dbinom_raw(n + 1, N, p, q)) * upper_relative_sum(n + 1, N, p, q);
    return std::clamp(1.0 - tail, 0.0, 1.0);
}

double log_cdf_sum(std::int64_t n, std::int64_t N, double p, double q) {
    const std::int64_t mode = binom_mode(N, p);
    if (n < mode) {
        return std::min(0.0, log_dbinom_raw(n, N, p, q) + std::log(lower_relative_sum(n, N, p, q)));
    }
    const double tail = std::exp(log_dbinom_raw(n + 1, N, p, q)) * upper_relative_sum(n + 1, N, p, q);
    return tail >= 1.0 ? kNegInf : std::log1p(-tail);
}

// Shared edge handling; returns true when `out` already holds the answer.
bool cdf_edges(std::int64_t n, std::int64_t N, double p, double& out) {
    if (N < 0) throw DomainError("binomial N must be nonnegative");
    if (n < 0) { out = 0.0; return true; }
    if (n >= N) { out = 1.0; return true; }
    if (p == 0.0) { out = 1.0; return true; }
    if (p == 1.0) { out = 0.0; return true; }
    return false;
}

}  // namespace

double log_factorial(std::int64_t n) {
    if (n < 0) throw DomainError("log_factorial: n must be nonnegative");
    if (n < kTableSize) return factorial_table()[static_cast<std::size_t>(n)];
    return log_factorial_formula(n);
}

double log_binomial_coeff(std::int64_t N, std::int64_t k) {
    if (N < 0 || k < 0 || k > N) return kNegInf;
    return log_factorial(N) - log_factorial(k) - log_factorial(N - k);
}

double log_beta(std::int64_t a, std::int64_t b) {
    if (a < 1 || b < 1) throw DomainError("log_beta: arguments must be >= 1");
    return log_factorial(a - 1) + log_factorial(b - 1) - log_factorial(a + b - 1);
}

double log_binom_pmf(std::int64_t k, std::int64_t N, double p) {
    check_prob(p, "p");
    if (N < 0) throw DomainError("binomial N must be nonnegative");
    return log_dbinom_raw(k, N, p, 1.0 - p);
}

double binom_pmf(std::int64_t k, std::int64_t N, double p) { return std::exp(log_binom_pmf(k, N, p)); }

double binom_cdf_by_summation(std::int64_t n, std::int64_t N, double p) {
    check_prob(p, "p");
    double out;
    if (cdf_edges(n, N, p, out)) return out;
    return cdf_sum(n, N, p, 1.0 - p);
}

double binom_cdf_by_beta(std::int64_t n, std::int64_t N, double p) {
    check_prob(p, "p");
    double out;
    if (cdf_edges(n, N, p, out)) return out;
    // Phi(n; N, p) = I_{1-p}(N - n, n + 1)
    return ibeta_xy(N - n, n + 1, 1.0 - p, p);
}

double binom_cdf(std::int64_t n, std::int64_t N, double p) {
    return N <= kSummationCrossover ? binom_cdf_by_summation(n, N, p) : binom_cdf_by_beta(n, N, p);
}

double binom_sf(std::int64_t n, std::int64_t N, double p) {
    check_prob(p, "p");
    double out;
    if (cdf_edges(n, N, p, out)) return 1.0 - out;
    const double q = 1.0 - p;
    if (N > kSummationCrossover) return ibeta_xy(n + 1, N - n, p, q);
    const std::int64_t mode = binom_mode(N, p);
    if (n < mode) return std::clamp(1.0 - cdf_sum(n, N, p, q), 0.0, 1.0);
    return std::min(1.0, std::exp(log_dbinom_raw(n + 1, N, p, q)) * upper_relative_sum(n + 1, N, p, q));
}

LogProb log_binom_cdf(std::int64_t n, std::int64_t N, double p) {
    check_prob(p, "p");
    double out;
    if (cdf_edges(n, N, p, out)) return out == 0.0 ? LogProb::zero() : LogProb::one();
    const double q = 1.0 - p;
    if (N <= kSummationCrossover) return {log_cdf_sum(n, N, p, q)};
    return {log_ibeta_xy(N - n, n + 1, q, p)};
}

double incomplete_beta_reg(std::int64_t a, std::int64_t b, double x) {
    if (a < 1 || b < 1) throw DomainError("incomplete_beta_reg: a, b must be >= 1");
    check_prob(x, "x");
    return ibeta_xy(a, b, x, 1.0 - x);
}

double binom_cdf_inv_eps(std::int64_t n, std::int64_t N, double target) {
    if (!(target > 0.0 && target < 1.0)) throw DomainError("binom_cdf_inv_eps: target must lie in (0,1)");
    if (n < 0 || n >= N) throw DomainError("binom_cdf_inv_eps: need 0 <= n < N");
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (binom_cdf(n, N, 1.0 - mid) < target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace randscen::specfun
