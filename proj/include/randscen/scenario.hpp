#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "randscen/bounds.hpp"
#include "randscen/rng.hpp"

namespace randscen::scenario {

using bounds::SupportBounds;
using Sample = Eigen::VectorXd;
using SampleSet = std::vector<Sample>;

struct Solution {
    Eigen::VectorXd x;
    double objective = 0.0;
    std::optional<std::int64_t> support_count;
    // Iterative solvers only: objective at each accepted iterate and the final stationarity residual.
    std::vector<double> history;
    double residual = 0.0;
    std::int64_t iterations = 0;
};

// Sampled convex program: minimize an objective subject to one constraint family per index j,
// imposed for every sample of that family's set.
class ScenarioProblem {
public:
    virtual ~ScenarioProblem() = default;

    virtual std::string name() const = 0;
    virtual int decision_dim() const = 0;
    virtual int sample_dim() const = 0;
    virtual int constraint_count() const { return 1; }
    virtual SupportBounds support(int j = 0) const = 0;

    // Fill `out` (resized if needed) with one draw for constraint family j.
    virtual void draw(Stream& rng, int j, Sample& out) const = 0;

    // One sample set per constraint family; deterministic in its input.
    virtual Solution solve(const std::vector<SampleSet>& sets) const = 0;

    // True iff the constraint of family j is violated at `sol` for sample `delta`.
    virtual bool violated(const Solution& sol, const Sample& delta, int j = 0) const = 0;

    // Closed-form violation probability when available.
    virtual std::optional<double> violation_probability(const Solution&, int /*j*/ = 0) const { return std::nullopt; }

    virtual nlohmann::json config() const = 0;

    Sample draw(Stream& rng, int j = 0) const {
        Sample s;
        draw(rng, j, s);
        return s;
    }
    Solution solve_single(const SampleSet& set) const { return solve(std::vector<SampleSet>{set}); }
};

// minimize x subject to delta <= x; uniform(0,1) samples. Fully supported with zeta = 1.
class Quantile1d final : public ScenarioProblem {
public:
    std::string name() const override { return "quantile1d"; }
    int decision_dim() const override { return 1; }
    int sample_dim() const override { return 1; }
    SupportBounds support(int = 0) const override { return {1, 1}; }
    using ScenarioProblem::draw;
    void draw(Stream& rng, int j, Sample& out) const override;
    Solution solve(const std::vector<SampleSet>& sets) const override;
    bool violated(const Solution& sol, const Sample& delta, int j = 0) const override;
    std::optional<double> violation_probability(const Solution& sol, int j = 0) const override;
    nlohmann::json config() const override;
};

Solution quantile1d_solve(const SampleSet& samples);

std::unique_ptr<ScenarioProblem> make_problem(const nlohmann::json& cfg);

}  // namespace randscen::scenario
