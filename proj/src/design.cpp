#include "randscen/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <tuple>

#include "randscen/errors.hpp"
#include "randscen/specfun.hpp"

namespace randscen::design {

namespace sf = randscen::specfun;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Smallest x in [lo, hi] with pred(x) true, for pred monotone false -> true.
template <class Pred>
std::int64_t first_true(std::int64_t lo, std::int64_t hi, Pred pred) {
    while (lo < hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (pred(mid)) hi = mid;
        else lo = mid + 1;
    }
    return lo;
}

// Boundary of a monotone predicate on [0, 1] by bisection; returns the point on the true side.
template <class Pred>
double bisect_unit(Pred true_at_hi_side) {
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (true_at_hi_side(mid)) hi = mid;
        else lo = mid;
    }
    return hi;
}

std::int64_t r_upper(const DesignSpec& spec, std::int64_t q_high) {
    return spec.r_max ? std::min(*spec.r_max, q_high) : q_high;
}

}  // namespace

void DesignSpec::validate() const {
    support.validate();
    if (!(eps_low >= 0.0 && eps_low < eps_high && eps_high <= 1.0)) {
        throw DomainError("design spec needs 0 <= eps_low < eps_high <= 1");
    }
    if (!(p_prior > 0.0 && p_prior < p_post && p_post < 1.0)) {
        throw DomainError("design spec needs 0 < p_prior < p_post < 1");
    }
    if (m < 1) throw DomainError("design spec needs m >= 1");
    if (support.zeta_high > m) throw DomainError("design spec needs support.zeta_high <= m");
    if (r_max && *r_max < support.zeta_high) throw DomainError("design spec needs r_max >= support.zeta_high");
}

std::pair<std::int64_t, std::int64_t> q_range(const DesignSpec& spec) {
    spec.validate();
    const std::int64_t m = spec.m;
    const std::int64_t zl = spec.support.zeta_low;
    const std::int64_t zh = spec.support.zeta_high;
    const double tail = 0.5 * (1.0 - spec.p_post);
    const std::int64_t shift = spec.q_high_rule == QHighRule::Tabulated ? 1 : 0;

    // Phi(q - zh; m, 1 - eps_high) >= (1 + p_post)/2, written through the upper tail.
    auto low_ok = [&](std::int64_t q) { return sf::binom_sf(q - zh, m, 1.0 - spec.eps_high) <= tail; };
    if (!low_ok(m)) {
        throw InfeasibleDesign("no q satisfies the lower confidence condition; increase m or relax eps_high/p_post");
    }
    const std::int64_t q_low = first_true(zh, m, low_ok);

    auto high_fails = [&](std::int64_t q) { return sf::binom_cdf(q - zl - shift, m, 1.0 - spec.eps_low) > tail; };
    if (high_fails(0)) {
        throw InfeasibleDesign("no q satisfies the upper confidence condition; increase m or relax eps_low/p_post");
    }
    const std::int64_t q_high = high_fails(m) ? first_true(0, m, high_fails) - 1 : m;

    if (q_low > q_high) {
        throw InfeasibleDesign("empty design band: q_low=" + std::to_string(q_low) + " > q_high=" +
                               std::to_string(q_high) + "; increase m or widen (eps_low, eps_high)");
    }
    return {q_low, q_high};
}

std::vector<double> trial_probability_profile(const DesignSpec& spec, std::int64_t q_low, std::int64_t q_high,
                                              unsigned workers) {
    spec.validate();
    const std::int64_t m = spec.m;
    const std::int64_t zl = spec.support.zeta_low;
    const std::int64_t zh = spec.support.zeta_high;
    if (q_low < zh || q_low > q_high || q_high > m) throw DomainError("trial probability needs zeta_high <= q_low <= q_high <= m");
    const std::int64_t r_lo = zh;
    const std::int64_t r_hi = r_upper(spec, q_high);
    if (r_hi < r_lo) throw InfeasibleDesign("empty r search range");

    const bool optimistic = spec.bound_mode == BoundMode::Optimistic;
    const bool has_zero = zl == 0;
    const std::int64_t z0 = std::max<std::int64_t>(1, zl);
    const std::size_t nq = static_cast<std::size_t>(q_high - q_low + 1);
    const std::size_t nz = static_cast<std::size_t>(zh - z0 + 1);

    // log P = base(r) - lf(q-r) + C_z(q) + A_z(r)
    std::vector<double> cz(nz * nq);
    for (std::size_t zi = 0; zi < nz; ++zi) {
        const std::int64_t z = z0 + static_cast<std::int64_t>(zi);
        for (std::size_t qi = 0; qi < nq; ++qi) {
            const std::int64_t q = q_low + static_cast<std::int64_t>(qi);
            cz[zi * nq + qi] = sf::log_factorial(m - q + z - 1) + sf::log_factorial(q - z) - sf::log_factorial(m - q);
        }
    }
    const double lf_m = sf::log_factorial(m);

    std::vector<double> out(static_cast<std::size_t>(r_hi - r_lo + 1), 0.0);
    auto work = [&](std::int64_t ra, std::int64_t rb) {
        std::vector<double> w(nq);
        std::vector<double> az(nz);
        for (std::int64_t r = ra; r < rb; ++r) {
            const double base = sf::log_factorial(m - r) + sf::log_factorial(r) - lf_m;
            for (std::size_t zi = 0; zi < nz; ++zi) {
                const std::int64_t z = z0 + static_cast<std::int64_t>(zi);
                az[zi] = -sf::log_factorial(z - 1) - sf::log_factorial(r - z);
            }
            const std::size_t q0 = static_cast<std::size_t>(std::max(r, q_low) - q_low);
            if (q0 >= nq) continue;
            std::fill(w.begin() + static_cast<std::ptrdiff_t>(q0), w.end(),
                      optimistic ? kNegInf : std::numeric_limits<double>::infinity());
            for (std::size_t zi = 0; zi < nz; ++zi) {
                const double a = az[zi];
                const double* c = cz.data() + zi * nq;
                if (optimistic) {
                    for (std::size_t qi = q0; qi < nq; ++qi) w[qi] = std::max(w[qi], c[qi] + a);
                } else {
                    for (std::size_t qi = q0; qi < nq; ++qi) w[qi] = std::min(w[qi], c[qi] + a);
                }
            }
            double sum = 0.0;
            for (std::size_t qi = q0; qi < nq; ++qi) {
                const std::int64_t q = q_low + static_cast<std::int64_t>(qi);
                const double lv = base - sf::log_factorial(q - r) + w[qi];
                double v = lv < -745.0 ? 0.0 : std::exp(lv);
                if (has_zero) {
                    // zeta = 0 contributes the limit value [q == m]
                    const double v0 = q == m ? 1.0 : 0.0;
                    v = optimistic ? std::max(v, v0) : std::min(v, v0);
                }
                sum += std::min(1.0, v);
            }
            out[static_cast<std::size_t>(r - r_lo)] = std::min(1.0, sum);
        }
    };

    const std::int64_t total = r_hi - r_lo + 1;
    const unsigned nw = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::min<std::int64_t>(total, 64))));
    if (nw == 1) {
        work(r_lo, r_hi + 1);
    } else {
        std::vector<std::thread> pool;
        const std::int64_t chunk = (total + nw - 1) / nw;
        for (unsigned t = 0; t < nw; ++t) {
            const std::int64_t a = r_lo + static_cast<std::int64_t>(t) * chunk;
            const std::int64_t b = std::min(r_hi + 1, a + chunk);
            if (a < b) pool.emplace_back(work, a, b);
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

double trial_probability(const DesignSpec& spec, std::int64_t r, std::int64_t q_low, std::int64_t q_high) {
    spec.validate();
    if (r < spec.support.zeta_high || r > q_high) throw DomainError("trial_probability needs zeta_high <= r <= q_high");
    double sum = 0.0;
    for (std::int64_t q = std::max(r, q_low); q <= q_high; ++q) {
        const auto iv = bounds::selection_prob_bounds(r, q, spec.m, spec.support);
        sum += spec.bound_mode == BoundMode::Optimistic ? iv.upper : iv.lower;
    }
    return std::min(1.0, sum);
}

std::pair<std::int64_t, double> optimize_r(const DesignSpec& spec, std::int64_t q_low, std::int64_t q_high,
                                           unsigned workers) {
    const auto prof = trial_probability_profile(spec, q_low, q_high, workers);
    std::size_t best = 0;
    for (std::size_t i = 1; i < prof.size(); ++i) {
        if (prof[i] > prof[best]) best = i;
    }
    return {spec.support.zeta_high + static_cast<std::int64_t>(best), prof[best]};
}

std::int64_t n_trials(double p_prior, double p_post, double p_trial) {
    if (!(p_prior > 0.0 && p_prior < p_post && p_post <= 1.0)) {
        throw DomainError("n_trials needs 0 < p_prior < p_post <= 1");
    }
    if (!(p_trial >= 0.0 && p_trial <= 1.0)) throw DomainError("n_trials needs p_trial in [0,1]");
    if (p_trial == 0.0) throw InfeasibleDesign("p_trial is zero: no number of trials reaches the prior confidence");
    if (p_trial >= 1.0 || p_trial >= p_prior / p_post) return 1;
    const double n = std::log1p(-p_prior / p_post) / std::log1p(-p_trial);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(n)));
}

std::int64_t posterior_anchor(std::int64_t m, double eps_high) {
    const double x = static_cast<double>(m) * (1.0 - eps_high);
    const double r = std::round(x);
    if (std::fabs(x - r) <= 1e-9 * std::max(1.0, x)) return static_cast<std::int64_t>(r);
    return static_cast<std::int64_t>(std::floor(x));
}

std::pair<double, double> posterior_resolution(std::int64_t m, double eps_high, const SupportBounds& support,
                                               double p_post) {
    support.validate();
    if (m < 1) throw DomainError("posterior_resolution needs m >= 1");
    if (!(p_post > 0.0 && p_post < 1.0)) throw DomainError("posterior_resolution needs p_post in (0,1)");
    if (!(eps_high >= 0.0 && eps_high <= 1.0)) throw DomainError("posterior_resolution needs eps_high in [0,1]");
    const std::int64_t n0 = posterior_anchor(m, eps_high);
    const double tail = 0.5 * (1.0 - p_post);

    const std::int64_t na = n0 - support.zeta_high;
    if (na < 0) throw InfeasibleDesign("posterior resolution: m(1-eps_high) < zeta_high, no eps_a exists");
    // Phi(na; m, 1-eps) >= (1+p_post)/2  <=>  upper tail <= (1-p_post)/2; monotone in eps.
    const double eps_a = bisect_unit([&](double e) { return sf::binom_sf(na, m, 1.0 - e) <= tail; });

    const std::int64_t nb = n0 - support.zeta_low;
    if (nb >= m) throw InfeasibleDesign("posterior resolution: m(1-eps_high) - zeta_low >= m, no eps_b exists");
    // max eps with Phi(nb; m, 1-eps) <= (1-p_post)/2
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (sf::binom_cdf(nb, m, 1.0 - mid) <= tail) lo = mid;
        else hi = mid;
    }
    return {eps_a, lo};
}

std::pair<double, double> posterior_resolution(const DesignSpec& spec) {
    spec.validate();
    return posterior_resolution(spec.m, spec.eps_high, spec.support, spec.p_post);
}

std::int64_t min_sample_size(double target_delta_eps, double eps_high, const SupportBounds& support, double p_post) {
    if (!(target_delta_eps > 0.0)) throw DomainError("min_sample_size needs target_delta_eps > 0");
    support.validate();
    constexpr std::int64_t kLimit = 100000000;
    auto width = [&](std::int64_t m) {
        try {
            const auto [a, b] = posterior_resolution(m, eps_high, support, p_post);
            return std::max(0.0, a - b);
        } catch (const InfeasibleDesign&) {
            return 1.0;
        }
    };
    const std::int64_t m0 = std::max<std::int64_t>(1, support.zeta_high);
    if (width(m0) <= target_delta_eps) return m0;
    std::int64_t bad = m0;
    std::int64_t good = 0;
    for (std::int64_t m = 2 * m0;; m *= 2) {
        if (m > kLimit) {
            if (width(kLimit) <= target_delta_eps) {
                good = kLimit;
                break;
            }
            throw ResourceError("min_sample_size: resolution target not met for m <= 1e8");
        }
        if (width(m) <= target_delta_eps) {
            good = m;
            break;
        }
        bad = m;
    }
    while (good - bad > 1) {
        const std::int64_t mid = bad + (good - bad) / 2;
        if (width(mid) <= target_delta_eps) good = mid;
        else bad = mid;
    }
    return good;
}

TrialDesign make_design(const DesignSpec& spec, unsigned workers) {
    spec.validate();
    TrialDesign d;
    d.m = spec.m;
    std::tie(d.q_low, d.q_high) = q_range(spec);
    std::tie(d.r_star, d.p_trial) = optimize_r(spec, d.q_low, d.q_high, workers);
    d.n_trials = n_trials(spec.p_prior, spec.p_post, d.p_trial);
    d.guaranteed = spec.bound_mode == BoundMode::Guaranteed;
    try {
        std::tie(d.eps_a, d.eps_b) = posterior_resolution(spec);
        d.delta_eps = std::max(0.0, d.eps_a - d.eps_b);
        d.posterior_feasible = true;
    } catch (const InfeasibleDesign&) {
        d.eps_a = 1.0;
        d.eps_b = 0.0;
        d.delta_eps = 1.0;
        d.posterior_feasible = false;
    }
    return d;
}

MultiDesign multi_design(const std::vector<DesignSpec>& specs, unsigned workers) {
    if (specs.empty()) throw DomainError("multi_design needs at least one constraint");
    for (const auto& s : specs) {
        s.validate();
        if (s.p_prior != specs.front().p_prior || s.m != specs.front().m) {
            throw DomainError("multi_design constraints must share p_prior and m");
        }
    }
    MultiDesign md;
    md.p_trial = 1.0;
    md.p_post = 1.0;
    for (const auto& s : specs) {
        md.per_constraint.push_back(make_design(s, workers));
        md.p_trial *= md.per_constraint.back().p_trial;
        md.p_post *= s.p_post;
    }
    const double p_prior = specs.front().p_prior;
    if (md.p_post <= p_prior) {
        throw InfeasibleDesign("product of p_post over constraints must exceed p_prior");
    }
    md.n_trials = n_trials(p_prior, md.p_post, md.p_trial);
    return md;
}

std::string to_string(BoundMode mode) { return mode == BoundMode::Guaranteed ? "guaranteed" : "optimistic"; }

BoundMode parse_bound_mode(const std::string& s) {
    if (s == "guaranteed" || s == "Guaranteed") return BoundMode::Guaranteed;
    if (s == "optimistic" || s == "Optimistic") return BoundMode::Optimistic;
    throw DomainError("bound_mode must be 'guaranteed' or 'optimistic', got '" + s + "'");
}

std::string to_string(QHighRule rule) { return rule == QHighRule::Tabulated ? "tabulated" : "literal"; }

QHighRule parse_q_high_rule(const std::string& s) {
    if (s == "tabulated") return QHighRule::Tabulated;
    if (s == "literal") return QHighRule::Literal;
    throw DomainError("q_high_rule must be 'tabulated' or 'literal', got '" + s + "'");
}

}  // namespace randscen::design
