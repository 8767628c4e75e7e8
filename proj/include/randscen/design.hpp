#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "randscen/bounds.hpp"

namespace randscen::design {

using bounds::SupportBounds;

// Guaranteed: per-q minimum over zeta (prior bound holds).
// Optimistic: per-q maximum over zeta (not a guarantee; flagged in output).
enum class BoundMode { Guaranteed, Optimistic };

// How the upper end of the band is located.
//   Tabulated: max q with Phi(q - zeta_low - 1; m, 1 - eps_low) <= (1 - p_post)/2
//   Literal:   max q with Phi(q - zeta_low;     m, 1 - eps_low) <= (1 - p_post)/2
// Tabulated reproduces every published design; see README.
enum class QHighRule { Tabulated, Literal };

struct DesignSpec {
    double eps_low = 0.0;
    double eps_high = 0.1;
    double p_prior = 0.9;
    double p_post = 0.95;
    std::int64_t m = 1000;
    SupportBounds support{};
    std::optional<std::int64_t> r_max;
    BoundMode bound_mode = BoundMode::Guaranteed;
    QHighRule q_high_rule = QHighRule::Tabulated;

    void validate() const;
};

struct TrialDesign {
    std::int64_t m = 0;
    std::int64_t q_low = 0;
    std::int64_t q_high = 0;
    std::int64_t r_star = 0;
    double p_trial = 0.0;
    std::int64_t n_trials = 1;
    double eps_a = 1.0;
    double eps_b = 0.0;
    double delta_eps = 1.0;
    bool guaranteed = true;
    bool posterior_feasible = true;

    double band_center() const { return 0.5 * static_cast<double>(q_low + q_high); }
};

struct MultiDesign {
    std::vector<TrialDesign> per_constraint;
    double p_trial = 0.0;     // product of per-constraint p_trial
    double p_post = 0.0;      // product of per-constraint p_post
    std::int64_t n_trials = 1;
};

std::pair<std::int64_t, std::int64_t> q_range(const DesignSpec& spec);

// Probability that theta lands in [q_low, q_high] for subset size r (bound per bound_mode).
double trial_probability(const DesignSpec& spec, std::int64_t r, std::int64_t q_low, std::int64_t q_high);

// Exhaustive scan over r in [zeta_high, min(r_max, q_high)]; ties go to the smaller r.
std::pair<std::int64_t, double> optimize_r(const DesignSpec& spec, std::int64_t q_low, std::int64_t q_high,
                                           unsigned workers = 1);

// Same scan, returning p_trial(r) for every scanned r (index 0 is r = zeta_high).
std::vector<double> trial_probability_profile(const DesignSpec& spec, std::int64_t q_low, std::int64_t q_high,
                                              unsigned workers = 1);

std::int64_t n_trials(double p_prior, double p_post, double p_trial);

std::pair<double, double> posterior_resolution(std::int64_t m, double eps_high, const SupportBounds& support,
                                               double p_post);
std::pair<double, double> posterior_resolution(const DesignSpec& spec);

// floor(m (1 - eps_high)), robust to representation error in eps_high.
std::int64_t posterior_anchor(std::int64_t m, double eps_high);

std::int64_t min_sample_size(double target_delta_eps, double eps_high, const SupportBounds& support, double p_post);

TrialDesign make_design(const DesignSpec& spec, unsigned workers = 1);

MultiDesign multi_design(const std::vector<DesignSpec>& specs, unsigned workers = 1);

std::string to_string(BoundMode mode);
BoundMode parse_bound_mode(const std::string& s);
std::string to_string(QHighRule rule);
QHighRule parse_q_high_rule(const std::string& s);

}  // namespace randscen::design
