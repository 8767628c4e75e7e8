#include "randscen/scenario.hpp"

#include <algorithm>

#include "randscen/errors.hpp"
#include "randscen/fhc.hpp"
#include "randscen/minball.hpp"

namespace randscen::scenario {

void Quantile1d::draw(Stream& rng, int, Sample& out) const {
    out.resize(1);
    out[0] = rng.uniform();
}

Solution quantile1d_solve(const SampleSet& samples) {
    if (samples.empty()) throw DomainError("quantile1d_solve needs at least one sample");
    double best = samples.front()[0];
    for (const auto& s : samples) best = std::max(best, s[0]);
    Solution sol;
    sol.x = Eigen::VectorXd::Constant(1, best);
    sol.objective = best;
    sol.support_count = 1;
    return sol;
}

Solution Quantile1d::solve(const std::vector<SampleSet>& sets) const {
    if (sets.size() != 1) throw DomainError("quantile1d has a single constraint family");
    return quantile1d_solve(sets.front());
}

bool Quantile1d::violated(const Solution& sol, const Sample& delta, int) const { return delta[0] > sol.x[0]; }

std::optional<double> Quantile1d::violation_probability(const Solution& sol, int) const {
    return std::clamp(1.0 - sol.x[0], 0.0, 1.0);
}

nlohmann::json Quantile1d::config() const {
    return {{"problem", "quantile1d"}, {"distribution", "uniform(0,1)"}};
}

std::unique_ptr<ScenarioProblem> make_problem(const nlohmann::json& cfg) {
    if (!cfg.contains("problem")) throw DomainError("problem config needs a 'problem' field");
    const std::string kind = cfg.at("problem").get<std::string>();
    if (kind == "quantile1d") return std::make_unique<Quantile1d>();
    if (kind == "minball") {
        const int dim = cfg.value("dim", 4);
        if (cfg.contains("distribution") && cfg.at("distribution").get<std::string>() != "standard normal") {
            throw DomainError("minball supports only distribution 'standard normal'");
        }
        return std::make_unique<MinBall>(dim);
    }
    if (kind == "fhc") return std::make_unique<Fhc>(FhcConfig::from_json(cfg));
    throw DomainError("unknown problem '" + kind + "' (quantile1d|minball|fhc)");
}

}  // namespace randscen::scenario
