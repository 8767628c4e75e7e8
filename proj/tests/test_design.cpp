#include <boost/math/distributions/binomial.hpp>
#include <cmath>

#include "doctest.h"
#include "randscen/design.hpp"
#include "randscen/errors.hpp"

using namespace randscen;
using namespace randscen::design;

namespace {

// Lower and upper binomial tails straight from Boost.
double cdf(std::int64_t n, std::int64_t N, double p) {
    if (n < 0) return 0.0;
    if (n >= N) return 1.0;
    return boost::math::cdf(boost::math::binomial_distribution<double>(double(N), p), double(n));
}
double sf(std::int64_t n, std::int64_t N, double p) {
    if (n < 0) return 1.0;
    if (n >= N) return 0.0;
    return boost::math::cdf(boost::math::complement(boost::math::binomial_distribution<double>(double(N), p), double(n)));
}

double sel(std::int64_t r, std::int64_t q, std::int64_t m, std::int64_t k) {
    auto lg = [](double x) { return std::lgamma(x); };
    const double lc = lg(m - r + 1.0) - lg(q - r + 1.0) - lg(m - q + 1.0);
    const double lb1 = lg(m - q + k + 0.0) + lg(q - k + 1.0) - lg(m + 1.0);
    const double lb2 = lg(k + 0.0) + lg(r - k + 1.0) - lg(r + 1.0);
    return std::exp(lc + lb1 - lb2);
}

double p_trial_oracle(const DesignSpec& s, std::int64_t r, std::int64_t ql, std::int64_t qh) {
    double sum = 0.0;
    for (std::int64_t q = std::max(r, ql); q <= qh; ++q) {
        double v = s.bound_mode == BoundMode::Guaranteed ? 1e300 : 0.0;
        for (std::int64_t k = s.support.zeta_low; k <= s.support.zeta_high; ++k) {
            const double x = sel(r, q, s.m, k);
            v = s.bound_mode == BoundMode::Guaranteed ? std::min(v, x) : std::max(v, x);
        }
        sum += v;
    }
    return sum;
}

DesignSpec sec41(BoundMode mode = BoundMode::Guaranteed) {
    DesignSpec s;
    s.eps_low = 0.19;
    s.eps_high = 0.21;
    s.p_prior = 0.9;
    s.p_post = 0.95;
    s.m = 100000;
    s.support = {2, 5};
    s.bound_mode = mode;
    return s;
}

DesignSpec case_a() {
    DesignSpec s;
    s.eps_low = 0.0;
    s.eps_high = 0.005;
    s.p_prior = 0.9;
    s.p_post = 1.0 - 1e-9;
    s.m = 65000;
    s.support = {1, 3};
    s.r_max = 1000;
    return s;
}

DesignSpec case_b() {
    DesignSpec s;
    s.eps_low = 0.18;
    s.eps_high = 0.22;
    s.p_prior = 0.9;
    s.p_post = 0.995;
    s.m = 65000;
    s.support = {1, 3};
    return s;
}

void check_q_range_extremal(const DesignSpec& s) {
    const auto [ql, qh] = q_range(s);
    const double tail = 0.5 * (1.0 - s.p_post);
    const auto zl = s.support.zeta_low, zh = s.support.zeta_high;
    CHECK(sf(ql - zh, s.m, 1.0 - s.eps_high) <= tail);
    CHECK(sf(ql - 1 - zh, s.m, 1.0 - s.eps_high) > tail);
    CHECK(cdf(qh - zl - 1, s.m, 1.0 - s.eps_low) <= tail);
    if (qh < s.m) CHECK(cdf(qh - zl, s.m, 1.0 - s.eps_low) > tail);
}

}  // namespace

TEST_CASE("spec validation") {
    DesignSpec s = sec41();
    CHECK_NOTHROW(s.validate());
    s.eps_low = 0.3;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s = sec41();
    s.p_prior = 0.96;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s = sec41();
    s.r_max = 4;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s = sec41();
    s.support = {3, 2};
    CHECK_THROWS_AS(s.validate(), DomainError);

    CHECK(parse_bound_mode("optimistic") == BoundMode::Optimistic);
    CHECK(to_string(BoundMode::Guaranteed) == "guaranteed");
    CHECK(parse_q_high_rule(to_string(QHighRule::Literal)) == QHighRule::Literal);
    CHECK_THROWS_AS(parse_bound_mode("x"), DomainError);
}

TEST_CASE("q_range published bands") {
    CHECK(q_range(case_b()) == std::pair<std::int64_t, std::int64_t>{50999, 53025});
    CHECK(q_range(case_a()).second == 65000);
}

TEST_CASE("q_range is minimal and maximal") {
    check_q_range_extremal(sec41());
    check_q_range_extremal(case_a());
    check_q_range_extremal(case_b());
    DesignSpec s = sec41();
    s.m = 20000;
    s.support = {1, 10};
    s.p_post = 0.99;
    check_q_range_extremal(s);
    CHECK(q_range(sec41()) == std::pair<std::int64_t, std::int64_t>{79257, 80759});
}

TEST_CASE("q_range literal rule moves q_high down by one") {
    DesignSpec s = case_b();
    const auto tab = q_range(s);
    s.q_high_rule = QHighRule::Literal;
    const auto lit = q_range(s);
    CHECK(lit.first == tab.first);
    CHECK(lit.second == tab.second - 1);
}

TEST_CASE("q_range infeasible") {
    DesignSpec s = sec41();
    s.m = 200;
    s.p_post = 1.0 - 1e-12;
    CHECK_THROWS_AS(q_range(s), InfeasibleDesign);
}

TEST_CASE("n_trials") {
    CHECK(n_trials(0.9, 0.95, 0.0347) == 84);
    CHECK(n_trials(0.9, 0.95, 0.0736) == 39);
    CHECK(n_trials(0.9, 0.95, 0.9 / 0.95) == 1);
    CHECK(n_trials(0.9, 0.95, 0.99) == 1);
    CHECK(n_trials(0.9, 0.95, 1e-12) == static_cast<std::int64_t>(std::ceil(std::log1p(-0.9 / 0.95) / std::log1p(-1e-12))));
    CHECK_THROWS_AS(n_trials(0.95, 0.95, 0.1), DomainError);
    CHECK_THROWS_AS(n_trials(0.96, 0.95, 0.1), DomainError);
    CHECK_THROWS_AS(n_trials(0.9, 0.95, 0.0), InfeasibleDesign);

    for (double pp : {0.5, 0.8, 0.9, 0.99}) {
        std::int64_t prev = n_trials(pp, 0.999, 1e-4);
        for (double pt = 2e-4; pt < 1.0; pt *= 1.7) {
            const auto n = n_trials(pp, 0.999, pt);
            CHECK(n <= prev);
            prev = n;
        }
    }
    for (double pt : {0.001, 0.03, 0.4}) {
        std::int64_t prev = 0;
        for (double pp = 0.05; pp < 0.99; pp += 0.05) {
            const auto n = n_trials(pp, 0.995, pt);
            CHECK(n >= prev);
            prev = n;
        }
    }
}

TEST_CASE("worked example design") {
    const auto d = make_design(sec41());
    CHECK(d.r_star == 15);
    CHECK(d.n_trials == 84);
    CHECK(std::fabs(d.p_trial - 0.0347) <= 5e-5);
    CHECK(std::fabs(d.eps_a - 0.2125) <= 5e-4);
    CHECK(std::fabs(d.eps_b - 0.2075) <= 5e-4);
    CHECK(d.delta_eps == doctest::Approx(d.eps_a - d.eps_b));
    CHECK(d.guaranteed);
    CHECK(d.posterior_feasible);
    CHECK(d.p_trial == doctest::Approx(p_trial_oracle(sec41(), 15, d.q_low, d.q_high)).epsilon(1e-9));

    const auto o = make_design(sec41(BoundMode::Optimistic));
    CHECK(o.r_star == 25);
    CHECK(std::fabs(o.p_trial - 0.0736) <= 5e-5);
    CHECK(o.n_trials == 39);
    CHECK_FALSE(o.guaranteed);
}

TEST_CASE("optimize_r is an argmax on a downsampled re-scan") {
    for (const auto& s : {sec41(), sec41(BoundMode::Optimistic), case_b()}) {
        const auto [ql, qh] = q_range(s);
        const auto [r, p] = optimize_r(s, ql, qh);
        for (std::int64_t rr = s.support.zeta_high; rr <= std::min<std::int64_t>(qh, 400); rr += 3) {
            CHECK(p_trial_oracle(s, rr, ql, qh) <= p * (1 + 1e-9));
        }
        const auto prof = trial_probability_profile(s, ql, qh);
        CHECK(prof.size() == static_cast<std::size_t>(qh - s.support.zeta_high + 1));
        CHECK(prof[r - s.support.zeta_high] == p);
        for (std::size_t i = 0; i + s.support.zeta_high < static_cast<std::size_t>(r); ++i) CHECK(prof[i] < p);
    }
}

TEST_CASE("r_max caps the scan") {
    const DesignSpec s = case_a();
    const auto d = make_design(s);
    CHECK(d.r_star == 1000);
    CHECK(d.q_high == 65000);
    const auto [ql, qh] = q_range(s);
    CHECK(trial_probability_profile(s, ql, qh).size() == 998);
    CHECK(d.p_trial == doctest::Approx(p_trial_oracle(s, 1000, ql, qh)).epsilon(1e-9));
}

TEST_CASE("second published case") {
    const auto d = make_design(case_b());
    CHECK(d.r_star == 8);
    CHECK(d.n_trials == 44);
    CHECK(std::fabs(d.p_trial - 0.053) <= 5e-4);
    CHECK(d.delta_eps <= 0.0093);
    CHECK(make_design(case_a()).delta_eps <= 0.0037);
}

TEST_CASE("workers do not change the design") {
    const auto a = make_design(case_b(), 1);
    const auto b = make_design(case_b(), 3);
    CHECK(a.r_star == b.r_star);
    CHECK(a.p_trial == b.p_trial);
    CHECK(a.n_trials == b.n_trials);
}

TEST_CASE("posterior resolution") {
    CHECK(posterior_anchor(100000, 0.21) == 79000);
    CHECK(posterior_anchor(1000, 0.2345) == 765);
    CHECK(posterior_anchor(65000, 0.005) == 64675);

    const auto [ea, eb] = posterior_resolution(100000, 0.21, {2, 5}, 0.95);
    const double tail = 0.025;
    CHECK(sf(79000 - 5, 100000, 1 - ea) <= tail);
    CHECK(sf(79000 - 5, 100000, 1 - (ea - 1e-7)) > tail);
    CHECK(cdf(79000 - 2, 100000, 1 - eb) <= tail);
    CHECK(cdf(79000 - 2, 100000, 1 - (eb + 1e-7)) > tail);

    double prev = 1.0;
    for (std::int64_t m : {10000, 100000, 1000000}) {
        const auto [a, b] = posterior_resolution(m, 0.21, {3, 3}, 0.95);
        CHECK(a - b < prev);
        prev = a - b;
    }
    // both ends meet at the median crossing as p_post -> 0
    const auto [a0, b0] = posterior_resolution(1000, 0.2, {3, 3}, 1e-6);
    CHECK(a0 >= b0);
    CHECK(a0 - b0 < 1e-6);
    CHECK_THROWS_AS(posterior_resolution(3, 0.5, {2, 5}, 0.95), InfeasibleDesign);
}

TEST_CASE("min_sample_size") {
    auto width = [](std::int64_t m, double eh, SupportBounds s, double pp) {
        const auto [a, b] = posterior_resolution(m, eh, s, pp);
        return std::max(0.0, a - b);
    };
    // at m = 1e5 the resolution is 0.00508, which prints as 0.005 but misses a strict 0.005 target
    const double w5 = width(100000, 0.21, {2, 5}, 0.95);
    CHECK(std::fabs(w5 - 0.005) < 1e-4);
    CHECK(min_sample_size(w5 + 1e-9, 0.21, {2, 5}, 0.95) <= 100000);
    const auto m1 = min_sample_size(0.005, 0.21, {2, 5}, 0.95);
    CHECK(m1 > 100000);
    CHECK(width(m1, 0.21, {2, 5}, 0.95) <= 0.005);
    CHECK(width(m1 - 1, 0.21, {2, 5}, 0.95) > 0.005);

    CHECK(min_sample_size(0.0037, 0.005, {1, 3}, 1.0 - 1e-9) <= 65000);
    CHECK(min_sample_size(0.0093, 0.22, {1, 3}, 0.995) <= 65000);
    CHECK(min_sample_size(1.0, 0.3, {2, 5}, 0.95) == 5);
    CHECK_THROWS_AS(min_sample_size(0.0, 0.3, {2, 5}, 0.95), DomainError);
}

TEST_CASE("multi_design") {
    const auto single = multi_design({case_b()});
    const auto d = make_design(case_b());
    CHECK(single.n_trials == d.n_trials);
    CHECK(single.p_trial == d.p_trial);

    const auto md = multi_design({case_a(), case_b()});
    REQUIRE(md.per_constraint.size() == 2);
    const double pt = md.per_constraint[0].p_trial * md.per_constraint[1].p_trial;
    CHECK(md.p_trial == doctest::Approx(pt).epsilon(1e-14));
    CHECK(std::fabs(md.p_trial - 0.020) <= 5e-4);
    CHECK(std::fabs(0.381 * 0.053 - 0.0202) < 5e-5);
    const double pp = case_a().p_post * case_b().p_post;
    CHECK(md.n_trials == static_cast<std::int64_t>(std::ceil(std::log(1 - 0.9 / pp) / std::log(1 - pt))));

    DesignSpec other = case_b();
    other.m = 60000;
    CHECK_THROWS_AS(multi_design({case_a(), other}), DomainError);
    CHECK_THROWS_AS(multi_design({}), DomainError);
    DesignSpec lo = case_b();
    lo.p_prior = 0.5;
    lo.p_post = 0.7;
    CHECK_THROWS_AS(multi_design({lo, lo}), InfeasibleDesign);
}
