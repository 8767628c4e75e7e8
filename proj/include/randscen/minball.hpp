#pragma once

#include "randscen/scenario.hpp"

namespace randscen::scenario {

// Smallest ball enclosing the samples. x = (center, radius), objective = radius.
Solution minball_solve(const SampleSet& samples);

// Boundary band used to count support points.
inline double minball_support_tol(double radius) { return 1e-7 * (1.0 + radius); }

// Smallest enclosing hypersphere in R^d with standard normal samples; support in [2, d+1].
class MinBall final : public ScenarioProblem {
public:
    explicit MinBall(int dim);

    std::string name() const override { return "minball"; }
    int decision_dim() const override { return dim_ + 1; }
    int sample_dim() const override { return dim_; }
    SupportBounds support(int = 0) const override { return {2, dim_ + 1}; }
    using ScenarioProblem::draw;
    void draw(Stream& rng, int j, Sample& out) const override;
    Solution solve(const std::vector<SampleSet>& sets) const override;
    bool violated(const Solution& sol, const Sample& delta, int j = 0) const override;
    nlohmann::json config() const override;

private:
    int dim_;
};

}  // namespace randscen::scenario
