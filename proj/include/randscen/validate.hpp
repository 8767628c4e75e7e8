#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "randscen/design.hpp"
#include "randscen/engine.hpp"
#include "randscen/scenario.hpp"

namespace randscen::validate {

using bounds::ProbInterval;
using bounds::SupportBounds;
using design::DesignSpec;
using design::TrialDesign;
using scenario::ScenarioProblem;
using scenario::Solution;

struct EmpiricalEstimate {
    double point = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    std::int64_t n_draws = 0;
    std::int64_t count = 0;
    double confidence = 0.99;
};

// Exact two-sided binomial interval for k successes in n trials.
ProbInterval clopper_pearson(std::int64_t k, std::int64_t n, double confidence = 0.99);

// Fraction of fresh draws of family j that violate `sol`.
EmpiricalEstimate empirical_violation(const ScenarioProblem& problem, const Solution& sol, std::int64_t n_draws,
                                      std::uint64_t seed, int j = 0, double confidence = 0.99);

// ---- distribution of the selected count ----

struct QhatRow {
    double delta_q = 0.0;
    double empirical = 0.0;  // fraction of runs with |q_hat - centre| <= delta_q
    double lower = 0.0;
    double upper = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct QhatTable {
    double centre = 0.0;
    std::int64_t n_runs = 0;
    std::vector<QhatRow> rows;

    bool pass() const;
    void write_csv(std::ostream& os) const;  // delta_q,empirical,lower,upper,tolerance,pass
};

// Half-widths 0 .. 1.25 * (q_high - q_low) / 2, aligned with the band centre.
std::vector<double> default_delta_q_grid(const TrialDesign& d, std::size_t n = 26);

// P{|q_hat - c| <= dq} = 1 - (1 - P{|theta - c| <= dq})^N, with the single-trial probability bracketed by
// the per-q minimum and maximum selection probabilities summed over the window. Tolerance 4 sigma + 1/n.
QhatTable qhat_cdf_table(const std::vector<std::int64_t>& q_hats, const DesignSpec& spec, const TrialDesign& d,
                         const std::vector<double>& delta_q);

std::vector<std::int64_t> sample_q_hats(const ScenarioProblem& problem, const DesignSpec& spec, const TrialDesign& d,
                                        std::int64_t n_runs, std::uint64_t seed, unsigned workers = 1);

QhatTable qhat_cdf_check(const ScenarioProblem& problem, const DesignSpec& spec, const TrialDesign& d,
                         std::int64_t n_runs, std::uint64_t seed, unsigned workers = 1);

// ---- repeated end-to-end runs ----

struct RunRecord {
    std::uint64_t master_seed = 0;
    std::int64_t q_hat = 0;
    bool in_band = false;
    EmpiricalEstimate violation;
    bool within = false;  // |violation - (1 - q_hat/m)| <= delta_eps
};

struct RateCheck {
    double rate = 0.0;
    double target = 0.0;
    double sigma = 0.0;
    std::int64_t n = 0;
    bool pass = false;  // rate >= target - 4 sigma
};

struct CoverageOptions {
    std::int64_t n_runs = 200;
    std::int64_t fresh_draws = 1000000;
    double delta_eps = 0.0;  // <= 0: use the design's
    double posterior_target = 0.95;
    unsigned workers = 1;
};

struct CoverageStudy {
    std::vector<RunRecord> runs;
    double delta_eps = 0.0;
    RateCheck in_band;
    RateCheck within;
    QhatTable qhat;
    bool pass() const { return in_band.pass && within.pass && qhat.pass(); }
};

// Master seeds split_seed(seed, k); fresh draws from the Fresh domain of each master seed.
CoverageStudy coverage_study(const ScenarioProblem& problem, const DesignSpec& spec, const TrialDesign& d,
                             std::uint64_t seed, const CoverageOptions& opt = {});

// ---- exactness on quantile1d ----

struct ConditionalRow {
    double eps = 0.0;
    std::int64_t q = 0;  // -1 for pooled rows
    std::int64_t n = 0;
    double empirical = 0.0;
    double predicted = 0.0;
    double sigma = 0.0;
    bool pass = false;  // |empirical - predicted| <= 4 sigma
};

struct ExactnessResult {
    TrialDesign design;
    std::int64_t modal_q = 0;
    std::vector<ConditionalRow> pooled;
    std::vector<ConditionalRow> modal;
    bool pass() const;
};

// V(x_hat) = 1 - x_hat against Phi(q_hat - 1; m, 1 - eps) at five eps where the modal prediction is
// 0.1, 0.3, 0.5, 0.7, 0.9.
ExactnessResult exactness_check(const DesignSpec& spec, std::int64_t n_runs, std::uint64_t seed, unsigned workers = 1);

// ---- sampling lemmas on quantile1d ----

struct KsRow {
    int k = 0;
    std::int64_t n = 0;
    double statistic = 0.0;        // regularized violation vs v^k
    double plain_statistic = 0.0;  // 1 - max of k draws vs 1 - (1 - v)^k; reported only
    double critical = 0.0;
    bool pass = false;
};

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);
double ks_critical(std::int64_t n, double alpha);

std::vector<KsRow> lemma1_check(std::int64_t n_draws, std::uint64_t seed, int k_max = 5, double alpha = 0.01);

struct ProbCheck {
    std::string name;
    double empirical = 0.0;
    double bound = 0.0;
    double sigma = 0.0;
    std::int64_t n = 0;
    bool pass = false;
};

// P{max of r uniforms > 1 - eps} <= 1 - (1 - eps)^r.
ProbCheck theorem4_check(std::int64_t r, double eps, std::int64_t n_draws, std::uint64_t seed);

// P{J* >= J(eps) | theta_r = q} >= Phi(q - 1; m, 1 - eps) for every q seen at least min_count times,
// with eps set so the bound is 1/2.
std::vector<ProbCheck> corollary1_check(std::int64_t m, std::int64_t r, std::int64_t n_trials, std::uint64_t seed,
                                        std::int64_t min_count = 500);

// ---- golden tables ----

enum class Compare { Exact, Within, AtMost };

struct GoldenCheck {
    std::string item;
    std::string field;
    double computed = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    Compare rule = Compare::Exact;
    bool pass = false;
};

struct GoldenTable {
    std::string name;
    std::vector<GoldenCheck> rows;
    double seconds = 0.0;

    bool pass() const;
    std::size_t failures() const;
    void write_csv(std::ostream& os) const;  // item,field,computed,expected,tolerance,rule,pass
};

GoldenCheck golden(std::string item, std::string field, double computed, double expected, Compare rule,
                   double tolerance = 0.0);

GoldenTable reproduce_table1(unsigned workers = 1);
GoldenTable reproduce_table2(unsigned workers = 1);

std::vector<DesignSpec> table2_specs();  // cases (a) and (b); (c) is both together

// ---- figure data ----

// Columns eps,phi_lower,phi_upper,psi for the bounds at (q, m, s).
void write_bound_curves(std::ostream& os, std::int64_t q, std::int64_t m, const SupportBounds& s,
                        const std::vector<double>& eps_grid);

// eps with psi_campi_raw(q, zeta_high; m, eps) = target.
double psi_inverse_eps(std::int64_t q, std::int64_t zeta_high, std::int64_t m, double target);

struct Fig2Row {
    std::int64_t m = 0;
    std::int64_t q = 0;
    double eps5 = 0.0;
    double eps95 = 0.0;
    double eps95_psi = 0.0;
    double ratio = 0.0;  // (eps95_psi - eps5) / (eps95 - eps5)
};

std::vector<Fig2Row> fig2_sweep(const std::vector<std::int64_t>& ms, const SupportBounds& s = {1, 10},
                                double q_fraction = 0.75);
void write_fig2_csv(std::ostream& os, const std::vector<Fig2Row>& rows);  // m,q,eps5,eps95,eps95_psi,ratio

// max over the grid of psi - Phi(q - zeta_high; m, 1 - eps); <= 0 when the classical bound is dominated.
double dominance_gap(std::int64_t q, std::int64_t m, std::int64_t zeta_high, const std::vector<double>& eps_grid);

// ---- JSON ----

nlohmann::json to_json(const EmpiricalEstimate& e);
nlohmann::json to_json(const QhatTable& t);
nlohmann::json to_json(const RateCheck& r);
nlohmann::json to_json(const CoverageStudy& c);
nlohmann::json to_json(const ConditionalRow& r);
nlohmann::json to_json(const ExactnessResult& e);
nlohmann::json to_json(const KsRow& r);
nlohmann::json to_json(const ProbCheck& p);
nlohmann::json to_json(const GoldenTable& t);
nlohmann::json to_json(const Fig2Row& r);

std::string to_string(Compare c);

}  // namespace randscen::validate
