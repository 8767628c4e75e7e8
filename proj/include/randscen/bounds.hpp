#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace randscen::bounds {

// Almost-sure range of the support dimension of the sampled problem.
struct SupportBounds {
    std::int64_t zeta_low = 1;
    std::int64_t zeta_high = 1;

    void validate() const;
    std::int64_t width() const { return zeta_high - zeta_low; }
};

struct ProbInterval {
    double lower = 0.0;
    double upper = 1.0;
};

// Phi(q - zeta; m, 1 - eps).
double levelq_confidence(std::int64_t q, std::int64_t m, std::int64_t zeta, double eps);

// (Phi(q - zeta_high; m, 1 - eps), Phi(q - zeta_low; m, 1 - eps)).
ProbInterval levelq_interval(std::int64_t q, std::int64_t m, const SupportBounds& s, double eps);

// P{theta'_{r,k} = q}. k = 0 is taken as the limit k -> 0, i.e. [q == m].
double selection_prob_exact(std::int64_t r, std::int64_t q, std::int64_t m, std::int64_t k);
double log_selection_prob(std::int64_t r, std::int64_t q, std::int64_t m, std::int64_t k);

// (min, max) of selection_prob_exact over every integer zeta in the support range.
ProbInterval selection_prob_bounds(std::int64_t r, std::int64_t q, std::int64_t m, const SupportBounds& s);

// Comparison bound 1 - C(m-q+zh-1, m-q) Phi(m-q+zh-1; m, eps).
double psi_campi_raw(std::int64_t q, std::int64_t zeta_high, std::int64_t m, double eps);
double psi_campi(std::int64_t q, std::int64_t zeta_high, std::int64_t m, double eps);

// Phi(r-1; r, 1-eps) = 1 - (1-eps)^r.
double cost_upper_prob(std::int64_t r, double eps);

// Phi(q - zeta_high; m, 1 - eps).
double cost_lower_prob(std::int64_t q, std::int64_t m, std::int64_t zeta_high, double eps);

enum class BoundKind { LevelqLower, LevelqUpper, Psi, PsiRaw };

BoundKind parse_bound_kind(const std::string& name);
std::string to_string(BoundKind kind);

struct BoundCurve {
    std::string name;
    std::vector<std::pair<double, double>> points;  // (eps, value)

    void write_csv(std::ostream& os) const;  // header: eps,value
};

BoundCurve bound_curve(BoundKind kind, std::int64_t q, std::int64_t m, const SupportBounds& s,
                       const std::vector<double>& eps_grid);

std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace randscen::bounds
