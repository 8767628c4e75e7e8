#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "randscen/design.hpp"
#include "randscen/scenario.hpp"

namespace randscen::engine {

using design::DesignSpec;
using design::TrialDesign;
using scenario::ScenarioProblem;
using scenario::Solution;

struct TrialResult {
    std::int64_t index = 0;
    Solution solution;
    std::vector<std::int64_t> theta;  // one count per constraint family
    std::uint64_t seed = 0;
};

struct TrialFailure {
    std::int64_t index = 0;
    std::uint64_t seed = 0;
    std::string message;
};

struct PosteriorPoint {
    double eps = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

// Everything step (ii) needs: per-family specs and designs, the shared m and the trial count.
struct RunPlan {
    std::vector<DesignSpec> specs;
    std::vector<TrialDesign> designs;
    std::int64_t m = 0;
    std::int64_t n_trials = 1;

    static RunPlan single(const DesignSpec& spec, const TrialDesign& d);
    static RunPlan multi(const std::vector<DesignSpec>& specs, const design::MultiDesign& md);
    std::vector<std::int64_t> r_stars() const;
};

struct RunOptions {
    unsigned workers = 1;
    bool normalized_selection = false;
    std::optional<std::string> dump_dir;  // per-trial CSV sample dumps
    bool progress = false;                // progress lines on stderr
};

struct RunOutcome {
    Solution x_hat;
    std::vector<std::int64_t> q_hat;
    std::int64_t i_star = 0;  // position in `trials`
    std::vector<bool> in_band;
    std::vector<std::vector<PosteriorPoint>> posterior;  // per family, at {eps_low, c-de, c, c+de, eps_high}
    std::vector<TrialResult> trials;                     // successful trials in index order
    std::vector<TrialFailure> failures;
    bool prior_guarantee_void = false;
    std::uint64_t master_seed = 0;
    std::int64_t m = 0;
    std::int64_t n_trials = 0;
};

struct Selection {
    std::int64_t i_star = 0;
    std::vector<std::int64_t> q_hat;
};

std::uint64_t trial_seed(std::uint64_t master_seed, std::int64_t index);

// Draws m samples per family from the trial stream, solves on the first r*_j of family j and counts
// the samples of each family that are not violated.
TrialResult run_trial(const ScenarioProblem& problem, const std::vector<std::int64_t>& r_star, std::int64_t m,
                      std::uint64_t seed, std::int64_t index = 0, const std::string* dump_dir = nullptr);
TrialResult run_trial(const ScenarioProblem& problem, const TrialDesign& d, std::int64_t m, std::uint64_t seed);

// argmin_i max_j |(q_low_j + q_high_j)/2 - theta_ij|, ties broken by a draw from `select_seed`.
Selection select(const std::vector<std::vector<std::int64_t>>& thetas, const std::vector<TrialDesign>& designs,
                 std::uint64_t select_seed, bool normalized = false);

RunOutcome run(const ScenarioProblem& problem, const RunPlan& plan, std::uint64_t master_seed,
               const RunOptions& opt = {});

std::vector<PosteriorPoint> posterior_grid(const DesignSpec& spec, const TrialDesign& d, std::int64_t q_hat);

nlohmann::json to_json(const Solution& s);
nlohmann::json to_json(const TrialResult& t);
nlohmann::json to_json(const RunOutcome& o);

}  // namespace randscen::engine
