#include "randscen/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "randscen/errors.hpp"

namespace randscen::engine {

RunPlan RunPlan::single(const DesignSpec& spec, const TrialDesign& d) {
    return {{spec}, {d}, spec.m, d.n_trials};
}

RunPlan RunPlan::multi(const std::vector<DesignSpec>& specs, const design::MultiDesign& md) {
    if (specs.size() != md.per_constraint.size()) throw DomainError("run plan: specs and designs differ in length");
    return {specs, md.per_constraint, specs.front().m, md.n_trials};
}

std::vector<std::int64_t> RunPlan::r_stars() const {
    std::vector<std::int64_t> r;
    for (const auto& d : designs) r.push_back(d.r_star);
    return r;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::int64_t index) {
    return split_seed(domain_seed(master_seed, StreamDomain::Trial), static_cast<std::uint64_t>(index));
}

TrialResult run_trial(const ScenarioProblem& problem, const std::vector<std::int64_t>& r_star, std::int64_t m,
                      std::uint64_t seed, std::int64_t index, const std::string* dump_dir) {
    const int nu = problem.constraint_count();
    if (static_cast<int>(r_star.size()) != nu) {
        throw DomainError("run_trial: expected " + std::to_string(nu) + " subset sizes, got " + std::to_string(r_star.size()));
    }
    for (auto r : r_star) {
        if (r < 1 || r > m) throw DomainError("run_trial needs 1 <= r* <= m");
    }
    const Stream base(seed);
    std::vector<Stream> streams;
    for (int j = 0; j < nu; ++j) streams.push_back(base.split(static_cast<std::uint64_t>(j)));

    std::vector<std::ofstream> dumps;
    if (dump_dir) {
        for (int j = 0; j < nu; ++j) {
            const std::string path = *dump_dir + "/trial_" + std::to_string(index) + "_c" + std::to_string(j) + ".csv";
            dumps.emplace_back(path);
            if (!dumps.back()) throw ResourceError("cannot open sample dump " + path);
            dumps.back().precision(17);
            for (int k = 0; k < problem.sample_dim(); ++k) dumps.back() << (k ? ",d" : "d") << k;
            dumps.back() << '\n';
        }
    }
    auto dump = [&](int j, const scenario::Sample& s) {
        if (!dump_dir) return;
        auto& os = dumps[static_cast<std::size_t>(j)];
        for (Eigen::Index k = 0; k < s.size(); ++k) os << (k ? "," : "") << s[k];
        os << '\n';
    };

    std::vector<scenario::SampleSet> sets(static_cast<std::size_t>(nu));
    for (int j = 0; j < nu; ++j) {
        auto& set = sets[static_cast<std::size_t>(j)];
        set.reserve(static_cast<std::size_t>(r_star[static_cast<std::size_t>(j)]));
        for (std::int64_t i = 0; i < r_star[static_cast<std::size_t>(j)]; ++i) {
            set.push_back(problem.draw(streams[static_cast<std::size_t>(j)], j));
            dump(j, set.back());
        }
    }

    TrialResult res;
    res.index = index;
    res.seed = seed;
    try {
        res.solution = problem.solve(sets);
    } catch (const SolverError& e) {
        throw SolverError("trial " + std::to_string(index) + ": " + e.what());
    }

    scenario::Sample buf;
    for (int j = 0; j < nu; ++j) {
        std::int64_t ok = 0;
        for (const auto& s : sets[static_cast<std::size_t>(j)]) ok += problem.violated(res.solution, s, j) ? 0 : 1;
        auto& rng = streams[static_cast<std::size_t>(j)];
        for (std::int64_t i = r_star[static_cast<std::size_t>(j)]; i < m; ++i) {
            problem.draw(rng, j, buf);
            dump(j, buf);
            ok += problem.violated(res.solution, buf, j) ? 0 : 1;
        }
        res.theta.push_back(ok);
    }
    return res;
}

TrialResult run_trial(const ScenarioProblem& problem, const TrialDesign& d, std::int64_t m, std::uint64_t seed) {
    return run_trial(problem, std::vector<std::int64_t>{d.r_star}, m, seed);
}

Selection select(const std::vector<std::vector<std::int64_t>>& thetas, const std::vector<TrialDesign>& designs,
                 std::uint64_t select_seed, bool normalized) {
    if (thetas.empty()) throw DomainError("select needs at least one trial");
    std::vector<double> score(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        if (thetas[i].size() != designs.size()) throw DomainError("select: theta and design counts differ");
        double worst = 0.0;
        for (std::size_t j = 0; j < designs.size(); ++j) {
            double dist = std::fabs(designs[j].band_center() - static_cast<double>(thetas[i][j]));
            if (normalized) dist /= std::max(0.5, 0.5 * static_cast<double>(designs[j].q_high - designs[j].q_low));
            worst = std::max(worst, dist);
        }
        score[i] = worst;
    }
    const double best = *std::min_element(score.begin(), score.end());
    std::vector<std::size_t> ties;
    for (std::size_t i = 0; i < score.size(); ++i) {
        if (score[i] == best) ties.push_back(i);
    }
    Stream coin(select_seed);
    const std::size_t pick = ties.size() == 1 ? ties.front() : ties[coin.below(ties.size())];
    return {static_cast<std::int64_t>(pick), thetas[pick]};
}

std::vector<PosteriorPoint> posterior_grid(const DesignSpec& spec, const TrialDesign& d, std::int64_t q_hat) {
    const double c = 1.0 - static_cast<double>(q_hat) / static_cast<double>(spec.m);
    const double de = d.delta_eps;
    std::vector<PosteriorPoint> out;
    for (double e : {spec.eps_low, c - de, c, c + de, spec.eps_high}) {
        e = std::clamp(e, 0.0, 1.0);
        const auto iv = bounds::levelq_interval(q_hat, spec.m, spec.support, e);
        out.push_back({e, iv.lower, iv.upper});
    }
    return out;
}

RunOutcome run(const ScenarioProblem& problem, const RunPlan& plan, std::uint64_t master_seed, const RunOptions& opt) {
    const int nu = problem.constraint_count();
    if (static_cast<int>(plan.designs.size()) != nu || static_cast<int>(plan.specs.size()) != nu) {
        throw DomainError("run: plan has " + std::to_string(plan.designs.size()) + " constraint designs, problem has " +
                          std::to_string(nu));
    }
    for (int j = 0; j < nu; ++j) {
        const auto ps = problem.support(j);
        const auto& ds = plan.specs[static_cast<std::size_t>(j)].support;
        if (ps.zeta_low != ds.zeta_low || ps.zeta_high != ds.zeta_high) {
            throw DomainError("run: design support bounds differ from the problem's declared support for constraint " +
                              std::to_string(j));
        }
        if (plan.specs[static_cast<std::size_t>(j)].m != plan.m) throw DomainError("run: all constraints must share m");
    }
    if (plan.n_trials < 1) throw DomainError("run: n_trials must be >= 1");

    const auto n = static_cast<std::size_t>(plan.n_trials);
    const auto r_star = plan.r_stars();
    std::vector<std::optional<TrialResult>> results(n);
    std::vector<std::optional<TrialFailure>> failures(n);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex log_mutex;
    const std::string* dump = opt.dump_dir ? &*opt.dump_dir : nullptr;

    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            const std::uint64_t seed = trial_seed(master_seed, static_cast<std::int64_t>(i));
            try {
                results[i] = run_trial(problem, r_star, plan.m, seed, static_cast<std::int64_t>(i), dump);
            } catch (const SolverError& e) {
                failures[i] = TrialFailure{static_cast<std::int64_t>(i), seed, e.what()};
            }
            const std::size_t k = ++done;
            if (opt.progress && (k == n || k % std::max<std::size_t>(1, n / 10) == 0)) {
                std::lock_guard<std::mutex> lock(log_mutex);
                std::cerr << "[run] " << k << "/" << n << " trials\n";
            }
        }
    };
    const unsigned nw = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(n)));
    if (nw == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < nw; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    RunOutcome out;
    out.master_seed = master_seed;
    out.m = plan.m;
    out.n_trials = plan.n_trials;
    for (std::size_t i = 0; i < n; ++i) {
        if (results[i]) out.trials.push_back(std::move(*results[i]));
        if (failures[i]) out.failures.push_back(std::move(*failures[i]));
    }
    out.prior_guarantee_void = !out.failures.empty();
    if (out.trials.empty()) throw SolverError("run: every trial failed; first error: " + out.failures.front().message);

    std::vector<std::vector<std::int64_t>> thetas;
    for (const auto& t : out.trials) thetas.push_back(t.theta);
    const Selection sel = select(thetas, plan.designs, domain_seed(master_seed, StreamDomain::Select), opt.normalized_selection);
    out.i_star = sel.i_star;
    out.q_hat = sel.q_hat;
    out.x_hat = out.trials[static_cast<std::size_t>(sel.i_star)].solution;
    for (int j = 0; j < nu; ++j) {
        const auto& d = plan.designs[static_cast<std::size_t>(j)];
        const auto q = out.q_hat[static_cast<std::size_t>(j)];
        out.in_band.push_back(q >= d.q_low && q <= d.q_high);
        out.posterior.push_back(posterior_grid(plan.specs[static_cast<std::size_t>(j)], d, q));
    }
    return out;
}

nlohmann::json to_json(const Solution& s) {
    nlohmann::json j;
    j["x"] = std::vector<double>(s.x.data(), s.x.data() + s.x.size());
    j["objective"] = s.objective;
    j["support_count"] = s.support_count ? nlohmann::json(*s.support_count) : nlohmann::json(nullptr);
    if (s.iterations > 0) {
        j["iterations"] = s.iterations;
        j["residual"] = s.residual;
    }
    return j;
}

nlohmann::json to_json(const TrialResult& t) {
    return {{"index", t.index}, {"seed", t.seed}, {"theta", t.theta}, {"solution", to_json(t.solution)}};
}

nlohmann::json to_json(const RunOutcome& o) {
    nlohmann::json j;
    j["master_seed"] = o.master_seed;
    j["m"] = o.m;
    j["n_trials"] = o.n_trials;
    j["i_star"] = o.i_star;
    j["q_hat"] = o.q_hat;
    j["in_band"] = o.in_band;
    j["x_hat"] = to_json(o.x_hat);
    nlohmann::json post = nlohmann::json::array();
    for (const auto& fam : o.posterior) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : fam) arr.push_back({{"eps", p.eps}, {"lower", p.lower}, {"upper", p.upper}});
        post.push_back(arr);
    }
    j["posterior"] = post;
    j["prior_guarantee_void"] = o.prior_guarantee_void;
    nlohmann::json tr = nlohmann::json::array();
    for (const auto& t : o.trials) tr.push_back(to_json(t));
    j["trials"] = tr;
    nlohmann::json fl = nlohmann::json::array();
    for (const auto& f : o.failures) fl.push_back({{"index", f.index}, {"seed", f.seed}, {"message", f.message}});
    j["failures"] = fl;
    return j;
}

}  // namespace randscen::engine
