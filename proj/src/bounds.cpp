#include "randscen/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "randscen/errors.hpp"
#include "randscen/specfun.hpp"

namespace randscen::bounds {

namespace sf = randscen::specfun;

namespace {

void check_eps(double eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw DomainError("eps must lie in [0,1], got " + std::to_string(eps));
}

std::string fmt3(std::int64_t a, std::int64_t b, std::int64_t c) {
    return "(" + std::to_string(a) + ", " + std::to_string(b) + ", " + std::to_string(c) + ")";
}

}  // namespace

void SupportBounds::validate() const {
    if (zeta_low < 0 || zeta_high < 1 || zeta_low > zeta_high) {
        throw DomainError("support bounds need 0 <= zeta_low <= zeta_high, zeta_high >= 1; got (" +
                          std::to_string(zeta_low) + ", " + std::to_string(zeta_high) + ")");
    }
}

double levelq_confidence(std::int64_t q, std::int64_t m, std::int64_t zeta, double eps) {
    if (m < 1 || zeta < 0 || zeta > q || q > m) {
        throw DomainError("levelq_confidence needs 0 <= zeta <= q <= m; got (zeta, q, m) = " + fmt3(zeta, q, m));
    }
    check_eps(eps);
    return sf::binom_cdf(q - zeta, m, 1.0 - eps);
}

ProbInterval levelq_interval(std::int64_t q, std::int64_t m, const SupportBounds& s, double eps) {
    s.validate();
    if (q < s.zeta_high || q > m) {
        throw DomainError("levelq_interval needs zeta_high <= q <= m; got (zeta_high, q, m) = " + fmt3(s.zeta_high, q, m));
    }
    return {levelq_confidence(q, m, s.zeta_high, eps), levelq_confidence(q, m, s.zeta_low, eps)};
}

double log_selection_prob(std::int64_t r, std::int64_t q, std::int64_t m, std::int64_t k) {
    if (k < 0 || k > r || r > q || q > m || r < 1) {
        throw DomainError("selection probability needs 0 <= k <= r <= q <= m, r >= 1; got k=" + std::to_string(k) +
                          " (r, q, m) = " + fmt3(r, q, m));
    }
    if (k == 0) return q == m ? 0.0 : -std::numeric_limits<double>::infinity();
    return sf::log_binomial_coeff(m - r, q - r) + sf::log_beta(m - q + k, q - k + 1) - sf::log_beta(k, r - k + 1);
}

double selection_prob_exact(std::int64_t r, std::int64_t q, std::int64_t m, std::int64_t k) {
    if (k < 1) throw DomainError("selection_prob_exact needs k >= 1");
    return std::min(1.0, std::exp(log_selection_prob(r, q, m, k)));
}

ProbInterval selection_prob_bounds(std::int64_t r, std::int64_t q, std::int64_t m, const SupportBounds& s) {
    s.validate();
    if (r < s.zeta_high || r > q || q > m) {
        throw DomainError("selection_prob_bounds needs zeta_high <= r <= q <= m; got (r, q, m) = " + fmt3(r, q, m));
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::int64_t z = s.zeta_low; z <= s.zeta_high; ++z) {
        const double v = log_selection_prob(r, q, m, z);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {std::min(1.0, std::exp(lo)), std::min(1.0, std::exp(hi))};
}

double psi_campi_raw(std::int64_t q, std::int64_t zeta_high, std::int64_t m, double eps) {
    if (zeta_high < 1 || m < 1 || q > m || q < zeta_high - 1) {
        throw DomainError("psi_campi needs zeta_high >= 1 and zeta_high - 1 <= q <= m; got (zeta_high, q, m) = " +
                          fmt3(zeta_high, q, m));
    }
    check_eps(eps);
    const std::int64_t n = m - q + zeta_high - 1;
    const double log_c = sf::log_binomial_coeff(n, m - q);
    const double log_phi = sf::log_binom_cdf(n, m, eps).value;
    return -std::expm1(log_c + log_phi);
}

double psi_campi(std::int64_t q, std::int64_t zeta_high, std::int64_t m, double eps) {
    return std::clamp(psi_campi_raw(q, zeta_high, m, eps), 0.0, 1.0);
}

double cost_upper_prob(std::int64_t r, double eps) {
    if (r < 1) throw DomainError("cost_upper_prob needs r >= 1");
    check_eps(eps);
    if (eps == 1.0) return 1.0;
    return -std::expm1(static_cast<double>(r) * std::log1p(-eps));
}

double cost_lower_prob(std::int64_t q, std::int64_t m, std::int64_t zeta_high, double eps) {
    return levelq_confidence(q, m, zeta_high, eps);
}

BoundKind parse_bound_kind(const std::string& name) {
    if (name == "levelq_lower") return BoundKind::LevelqLower;
    if (name == "levelq_upper") return BoundKind::LevelqUpper;
    if (name == "psi") return BoundKind::Psi;
    if (name == "psi_raw") return BoundKind::PsiRaw;
    throw DomainError("unknown bound kind '" + name + "' (levelq_lower|levelq_upper|psi|psi_raw)");
}

std::string to_string(BoundKind kind) {
    switch (kind) {
        case BoundKind::LevelqLower: return "levelq_lower";
        case BoundKind::LevelqUpper: return "levelq_upper";
        case BoundKind::Psi: return "psi";
        case BoundKind::PsiRaw: return "psi_raw";
    }
    return "unknown";
}

void BoundCurve::write_csv(std::ostream& os) const {
    os << "eps,value\n";
    os.precision(17);
    for (const auto& [e, v] : points) os << e << ',' << v << '\n';
}

BoundCurve bound_curve(BoundKind kind, std::int64_t q, std::int64_t m, const SupportBounds& s,
                       const std::vector<double>& eps_grid) {
    s.validate();
    BoundCurve c{to_string(kind), {}};
    c.points.reserve(eps_grid.size());
    for (double e : eps_grid) {
        double v = 0.0;
        switch (kind) {
            case BoundKind::LevelqLower: v = levelq_confidence(q, m, s.zeta_high, e); break;
            case BoundKind::LevelqUpper: v = levelq_confidence(q, m, s.zeta_low, e); break;
            case BoundKind::Psi: v = psi_campi(q, s.zeta_high, m, e); break;
            case BoundKind::PsiRaw: v = psi_campi_raw(q, s.zeta_high, m, e); break;
        }
        c.points.emplace_back(e, v);
    }
    return c;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

}  // namespace randscen::bounds
