#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "randscen/design.hpp"
#include "randscen/engine.hpp"
#include "randscen/errors.hpp"
#include "randscen/minball.hpp"

using namespace randscen;
using namespace randscen::engine;
using scenario::Sample;
using scenario::SampleSet;

namespace {

// Max problem whose draws replay a fixed list; single-threaded use only.
class Scripted final : public ScenarioProblem {
public:
    explicit Scripted(std::vector<double> v) : values_(std::move(v)) {}
    std::string name() const override { return "scripted"; }
    int decision_dim() const override { return 1; }
    int sample_dim() const override { return 1; }
    bounds::SupportBounds support(int = 0) const override { return {1, 1}; }
    using ScenarioProblem::draw;
    void draw(Stream&, int, Sample& out) const override {
        out.resize(1);
        out[0] = values_[next_++ % values_.size()];
    }
    Solution solve(const std::vector<SampleSet>& sets) const override { return scenario::quantile1d_solve(sets[0]); }
    bool violated(const Solution& s, const Sample& d, int = 0) const override { return d[0] > s.x[0]; }
    nlohmann::json config() const override { return {{"problem", "scripted"}}; }

private:
    std::vector<double> values_;
    mutable std::size_t next_ = 0;
};

// Quantile problem whose solver fails on a chosen fraction of sample sets.
class Flaky final : public ScenarioProblem {
public:
    explicit Flaky(double fail_above) : fail_above_(fail_above) {}
    std::string name() const override { return "flaky"; }
    int decision_dim() const override { return 1; }
    int sample_dim() const override { return 1; }
    bounds::SupportBounds support(int = 0) const override { return {1, 1}; }
    using ScenarioProblem::draw;
    void draw(Stream& rng, int j, Sample& out) const override { inner_.draw(rng, j, out); }
    Solution solve(const std::vector<SampleSet>& sets) const override {
        if (sets[0][0][0] > fail_above_) throw SolverError("scripted failure");
        return inner_.solve(sets);
    }
    bool violated(const Solution& s, const Sample& d, int j = 0) const override { return inner_.violated(s, d, j); }
    nlohmann::json config() const override { return {{"problem", "flaky"}}; }

private:
    scenario::Quantile1d inner_;
    double fail_above_;
};

TrialDesign band(std::int64_t lo, std::int64_t hi) {
    TrialDesign d;
    d.q_low = lo;
    d.q_high = hi;
    return d;
}

DesignSpec quantile_spec(std::int64_t m) {
    DesignSpec s;
    s.eps_low = 0.1;
    s.eps_high = 0.3;
    s.p_prior = 0.9;
    s.p_post = 0.95;
    s.m = m;
    s.support = {1, 1};
    return s;
}

std::vector<std::vector<double>> read_csv(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> r;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST_CASE("run_trial hand count") {
    Scripted p({0.1, 0.4, 0.2, 0.9, 0.5});
    const auto t = run_trial(p, std::vector<std::int64_t>{2}, 5, 0);
    CHECK(t.solution.x[0] == 0.4);
    REQUIRE(t.theta.size() == 1);
    CHECK(t.theta[0] == 3);

    Scripted top({0.9, 0.4, 0.2, 0.1, 0.5});
    CHECK(run_trial(top, std::vector<std::int64_t>{2}, 5, 0).theta[0] == 5);
}

TEST_CASE("run_trial argument checks") {
    scenario::Quantile1d q;
    CHECK_THROWS_AS(run_trial(q, std::vector<std::int64_t>{6}, 5, 1), DomainError);
    CHECK_THROWS_AS(run_trial(q, std::vector<std::int64_t>{0}, 5, 1), DomainError);
    CHECK_THROWS_AS(run_trial(q, std::vector<std::int64_t>{1, 1}, 5, 1), DomainError);
}

TEST_CASE("selection frequency for m = 3, r = 2") {
    scenario::Quantile1d q;
    const int n = 1000000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        hits += run_trial(q, std::vector<std::int64_t>{2}, 3, trial_seed(99, i)).theta[0] == 2;
    }
    const double p = static_cast<double>(hits) / n;
    const double exact = bounds::selection_prob_exact(2, 2, 3, 1);
    CHECK(std::fabs(p - exact) <= 4.0 * std::sqrt(exact * (1 - exact) / n));
}

TEST_CASE("select") {
    const std::vector<TrialDesign> one{band(10, 14)};
    CHECK(select({{10}, {13}, {9}}, one, 1).i_star == 1);
    CHECK(select({{10}, {13}, {9}}, one, 1).q_hat == std::vector<std::int64_t>{13});

    // 10 and 14 are both at distance 2 from 12
    int first = 0, second = 0;
    for (std::uint64_t s = 0; s < 400; ++s) {
        const auto sel = select({{10}, {14}, {9}}, one, s);
        CHECK(sel.i_star != 2);
        (sel.i_star == 0 ? first : second)++;
        CHECK(select({{10}, {14}, {9}}, one, s).i_star == sel.i_star);
    }
    CHECK(first > 150);
    CHECK(second > 150);

    const std::vector<TrialDesign> two{band(10, 14), band(40, 50)};
    std::set<std::int64_t> seen;
    for (std::uint64_t s = 0; s < 100; ++s) seen.insert(select({{10, 50}, {12, 40}}, two, s).i_star);
    CHECK(seen == std::set<std::int64_t>{0, 1});
    CHECK(select({{10, 50}, {12, 44}}, two, 3).i_star == 1);

    // normalized distances weigh the narrow band more
    const std::vector<TrialDesign> uneven{band(10, 14), band(0, 100)};
    CHECK(select({{12, 90}, {14, 50}}, uneven, 0).i_star == 1);
    CHECK(select({{12, 90}, {14, 50}}, uneven, 0, true).i_star == 0);

    CHECK_THROWS_AS(select({}, one, 0), DomainError);
    CHECK_THROWS_AS(select({{1, 2}}, one, 0), DomainError);
}

TEST_CASE("single trial run is the trial verbatim") {
    scenario::Quantile1d q;
    const auto spec = quantile_spec(500);
    TrialDesign d = design::make_design(spec);
    d.n_trials = 1;
    const auto out = run(q, RunPlan::single(spec, d), 17);
    const auto t = run_trial(q, d, 500, trial_seed(17, 0));
    REQUIRE(out.trials.size() == 1);
    CHECK(out.i_star == 0);
    CHECK(out.q_hat == t.theta);
    CHECK(out.x_hat.x == t.solution.x);
    CHECK(out.in_band[0] == (t.theta[0] >= d.q_low && t.theta[0] <= d.q_high));
    REQUIRE(out.posterior[0].size() == 5);
    for (const auto& p : out.posterior[0]) {
        const auto iv = bounds::levelq_interval(t.theta[0], 500, spec.support, p.eps);
        CHECK(p.lower == iv.lower);
        CHECK(p.upper == iv.upper);
    }
}

TEST_CASE("run rejects mismatched plans") {
    scenario::Quantile1d q;
    auto spec = quantile_spec(500);
    const auto d = design::make_design(spec);
    spec.support = {1, 2};
    CHECK_THROWS_AS(run(q, RunPlan::single(spec, d), 0), DomainError);
    scenario::MinBall mb(4);
    CHECK_THROWS_AS(run(mb, RunPlan::single(quantile_spec(500), d), 0), DomainError);
}

TEST_CASE("failed trials are excluded and flagged") {
    const auto spec = quantile_spec(300);
    TrialDesign d = design::make_design(spec);
    d.n_trials = 40;
    Flaky some(0.5);
    const auto out = run(some, RunPlan::single(spec, d), 5);
    CHECK(!out.failures.empty());
    CHECK(!out.trials.empty());
    CHECK(out.failures.size() + out.trials.size() == 40);
    CHECK(out.prior_guarantee_void);
    for (const auto& f : out.failures) CHECK(f.message.find("trial " + std::to_string(f.index)) != std::string::npos);

    Flaky all(-1.0);
    CHECK_THROWS_AS(run(all, RunPlan::single(spec, d), 5), SolverError);
}

TEST_CASE("run is deterministic across workers") {
    scenario::MinBall mb(4);
    DesignSpec spec;
    spec.eps_low = 0.1;
    spec.eps_high = 0.3;
    spec.p_prior = 0.9;
    spec.p_post = 0.95;
    spec.m = 2000;
    spec.support = mb.support();
    const auto d = design::make_design(spec);
    RunOptions o1, o3;
    o3.workers = 3;
    const auto a = to_json(run(mb, RunPlan::single(spec, d), 42, o1)).dump();
    const auto b = to_json(run(mb, RunPlan::single(spec, d), 42, o3)).dump();
    CHECK(a == b);
    CHECK(a != to_json(run(mb, RunPlan::single(spec, d), 43, o1)).dump());
}

TEST_CASE("theta recount from sample dumps") {
    scenario::MinBall mb(3);
    DesignSpec spec;
    spec.eps_low = 0.1;
    spec.eps_high = 0.3;
    spec.p_prior = 0.9;
    spec.p_post = 0.95;
    spec.m = 1500;
    spec.support = mb.support();
    TrialDesign d = design::make_design(spec);
    d.n_trials = 4;
    const auto dir = std::filesystem::temp_directory_path() / "randscen_engine_dump";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    RunOptions opt;
    opt.dump_dir = dir.string();
    const auto out = run(mb, RunPlan::single(spec, d), 8, opt);
    for (const auto& t : out.trials) {
        const auto rows = read_csv((dir / ("trial_" + std::to_string(t.index) + "_c0.csv")).string());
        REQUIRE(rows.size() == 1500);
        const Eigen::VectorXd c = t.solution.x.head(3);
        const double R = t.solution.x[3];
        std::int64_t inside = 0;
        SampleSet head;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            Sample s(3);
            for (int k = 0; k < 3; ++k) s[k] = rows[i][k];
            if (i < static_cast<std::size_t>(d.r_star)) head.push_back(s);
            inside += mb.violated(t.solution, s) ? 0 : 1;
        }
        CHECK(inside == t.theta[0]);
        const auto again = scenario::minball_solve(head);
        CHECK(again.x[3] == doctest::Approx(R).epsilon(1e-12));
        CHECK((again.x.head(3) - c).norm() < 1e-10);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("in-band frequency on quantile1d") {
    scenario::Quantile1d q;
    const auto spec = quantile_spec(2000);
    const auto d = design::make_design(spec);
    const int runs = 500;
    int in = 0;
    for (int k = 0; k < runs; ++k) in += run(q, RunPlan::single(spec, d), split_seed(2024, k)).in_band[0];
    const double target = 1.0 - std::pow(1.0 - d.p_trial, static_cast<double>(d.n_trials));
    const double rate = static_cast<double>(in) / runs;
    CHECK(rate >= target - 4.0 * std::sqrt(target * (1 - target) / runs));
}

TEST_CASE("trial seeds") {
    CHECK(trial_seed(1, 0) != trial_seed(1, 1));
    CHECK(trial_seed(1, 0) != trial_seed(2, 0));
    CHECK(trial_seed(7, 3) == split_seed(domain_seed(7, StreamDomain::Trial), 3));
}
