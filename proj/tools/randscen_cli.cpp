// randscen: design, run and validate randomized scenario programs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "randscen/design.hpp"
#include "randscen/engine.hpp"
#include "randscen/errors.hpp"
#include "randscen/json_io.hpp"
#include "randscen/minball.hpp"
#include "randscen/scenario.hpp"
#include "randscen/specfun.hpp"
#include "randscen/validate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace randscen;

namespace {

enum Exit { kOk = 0, kDomain = 1, kUsage = 2, kFailure = 3 };

struct Config {
    std::string spec_path;
    std::uint64_t seed = 0;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    std::string out_dir = "./out";
    std::string which;
    std::int64_t n_runs = 0;
    std::int64_t fresh_draws = 1000000;
    bool dump = false;
    bool normalized = false;
};

void log(const std::string& msg) { std::cerr << "[randscen] " << msg << '\n'; }

std::string out_path(const Config& c, const std::string& name) {
    fs::create_directories(c.out_dir);
    return (fs::path(c.out_dir) / name).string();
}

std::string write_json(const Config& c, const std::string& name, const json& j) {
    const std::string p = out_path(c, name);
    io::write_text_file(p, j.dump(2) + "\n");
    return p;
}

template <class Writer>
std::string write_csv(const Config& c, const std::string& name, Writer&& w) {
    const std::string p = out_path(c, name);
    std::ofstream os(p);
    if (!os) throw ResourceError("cannot write '" + p + "'");
    w(os);
    return p;
}

std::unique_ptr<scenario::ScenarioProblem> problem_of(const json& doc) {
    if (!doc.contains("problem")) return nullptr;
    const json& p = doc.at("problem");
    return scenario::make_problem(p.is_string() ? json{{"problem", p}} : p);
}

// Single spec -> one design; several -> the joint design.
struct Designed {
    std::vector<design::DesignSpec> specs;
    std::vector<design::TrialDesign> designs;
    std::optional<design::MultiDesign> multi;
    json to_json() const {
        if (multi) return io::to_json(*multi, specs);
        return {{"spec", io::to_json(specs.front())}, {"design", io::to_json(designs.front())}};
    }
    engine::RunPlan plan() const {
        return multi ? engine::RunPlan::multi(specs, *multi) : engine::RunPlan::single(specs.front(), designs.front());
    }
};

Designed design_from(const json& doc, const scenario::ScenarioProblem* problem, unsigned workers) {
    Designed d;
    d.specs = io::specs_from_document(doc, problem);
    if (d.specs.size() == 1) {
        d.designs.push_back(design::make_design(d.specs.front(), workers));
    } else {
        d.multi = design::multi_design(d.specs, workers);
        d.designs = d.multi->per_constraint;
    }
    return d;
}

int cmd_design(const Config& c) {
    const json doc = io::read_json_file(c.spec_path);
    const auto problem = problem_of(doc);
    const auto d = design_from(doc, problem.get(), c.workers);
    for (const auto& td : d.designs) {
        log("r*=" + std::to_string(td.r_star) + " N=" + std::to_string(td.n_trials) + " q in [" +
            std::to_string(td.q_low) + "," + std::to_string(td.q_high) + "]");
    }
    std::cout << write_json(c, "design.json", d.to_json()) << '\n';
    return kOk;
}

int cmd_run(const Config& c) {
    const json doc = io::read_json_file(c.spec_path);
    const auto problem = problem_of(doc);
    if (!problem) throw DomainError("run: spec has no 'problem' field");
    const auto d = design_from(doc, problem.get(), c.workers);
    engine::RunOptions opt;
    opt.workers = c.workers;
    opt.normalized_selection = c.normalized;
    opt.progress = true;
    if (c.dump) {
        opt.dump_dir = out_path(c, "dumps");
        fs::create_directories(*opt.dump_dir);
    }
    const auto plan = d.plan();
    log("running " + std::to_string(plan.n_trials) + " trials of " + problem->name());
    const auto out = engine::run(*problem, plan, c.seed, opt);
    json j = engine::to_json(out);
    j["problem"] = problem->config();
    j["design"] = d.to_json();
    std::cout << write_json(c, "run.json", j) << '\n';
    if (out.trials.empty()) return kFailure;
    return kOk;
}

int cmd_bounds(const Config& c) {
    const json doc = io::read_json_file(c.spec_path);
    for (const char* f : {"q", "m", "support"}) {
        if (!doc.contains(f)) throw DomainError(std::string("bounds spec: missing field '") + f + "'");
    }
    const auto q = doc.at("q").get<std::int64_t>();
    const auto m = doc.at("m").get<std::int64_t>();
    const auto s = io::support_from_json(doc.at("support"));
    if (q < 1 || q > m) throw DomainError("bounds spec: need 1 <= q <= m");
    std::vector<double> grid;
    if (doc.contains("eps") && doc.at("eps").is_array()) {
        grid = doc.at("eps").get<std::vector<double>>();
    } else {
        const json g = doc.value("eps_grid", json{{"lo", 0.0}, {"hi", 1.0}, {"n", 1001}});
        grid = bounds::linspace(g.value("lo", 0.0), g.value("hi", 1.0), g.value("n", std::size_t{1001}));
    }
    const auto csv = write_csv(c, "bounds.csv", [&](std::ostream& os) { validate::write_bound_curves(os, q, m, s, grid); });
    json j{{"q", q}, {"m", m}, {"support", io::to_json(s)}, {"csv", csv}, {"points", grid.size()}};
    j["dominance_gap"] = validate::dominance_gap(q, m, s.zeta_high, grid);
    j["eps5"] = specfun::binom_cdf_inv_eps(q - s.zeta_low, m, 0.05);
    j["eps95"] = specfun::binom_cdf_inv_eps(q - s.zeta_high, m, 0.95);
    j["eps95_psi"] = validate::psi_inverse_eps(q, s.zeta_high, m, 0.95);
    std::cout << write_json(c, "bounds.json", j) << '\n';
    return kOk;
}

int cmd_validate(const Config& c) {
    const json doc = io::read_json_file(c.spec_path);
    const auto problem = problem_of(doc);
    if (!problem) throw DomainError("validate: spec has no 'problem' field");
    const auto d = design_from(doc, problem.get(), c.workers);
    if (d.multi) throw DomainError("validate: coverage checks need a single-constraint design");
    validate::CoverageOptions opt;
    opt.n_runs = c.n_runs > 0 ? c.n_runs : 200;
    opt.fresh_draws = c.fresh_draws;
    opt.workers = c.workers;
    opt.posterior_target = d.specs.front().p_post;
    log("validating over " + std::to_string(opt.n_runs) + " master seeds");
    const auto study = validate::coverage_study(*problem, d.specs.front(), d.designs.front(), c.seed, opt);
    write_csv(c, "validate_qhat.csv", [&](std::ostream& os) { study.qhat.write_csv(os); });
    json j = validate::to_json(study);
    j["design"] = d.to_json();
    std::cout << write_json(c, "validate.json", j) << '\n';
    return study.pass() ? kOk : kFailure;
}

design::DesignSpec section41_spec() {
    design::DesignSpec s;
    s.eps_low = 0.19;
    s.eps_high = 0.21;
    s.p_prior = 0.9;
    s.p_post = 0.95;
    s.m = 100000;
    s.support = {2, 5};
    return s;
}

int cmd_reproduce(const Config& c) {
    const std::string& w = c.which;
    json j{{"which", w}, {"seed", c.seed}};
    bool ok = true;
    if (w == "table1" || w == "table2") {
        const auto t = w == "table1" ? validate::reproduce_table1(c.workers) : validate::reproduce_table2(c.workers);
        j["csv"] = write_csv(c, w + ".csv", [&](std::ostream& os) { t.write_csv(os); });
        j["result"] = validate::to_json(t);
        ok = t.pass();
        log(w + ": " + std::to_string(t.rows.size() - t.failures()) + "/" + std::to_string(t.rows.size()) + " cells match");
    } else if (w == "fig1") {
        const bounds::SupportBounds s{1, 10};
        const auto grid = bounds::linspace(0.0, 1.0, 1001);
        j["csv"] = write_csv(c, "fig1.csv", [&](std::ostream& os) { validate::write_bound_curves(os, 375, 500, s, grid); });
        j["dominance_gap"] = validate::dominance_gap(375, 500, s.zeta_high, grid);
        ok = j["dominance_gap"].get<double>() <= 0.0;
    } else if (w == "fig2") {
        const auto rows = validate::fig2_sweep({200, 500, 1000, 2000, 5000});
        j["csv"] = write_csv(c, "fig2.csv", [&](std::ostream& os) { validate::write_fig2_csv(os, rows); });
        json arr = json::array();
        for (const auto& r : rows) {
            arr.push_back(validate::to_json(r));
            if (r.m <= 500) ok = ok && r.ratio >= 2.0;
        }
        j["rows"] = arr;
    } else if (w == "fig4") {
        const auto spec = section41_spec();
        const auto d = design::make_design(spec, c.workers);
        const scenario::MinBall problem(4);
        validate::CoverageOptions opt;
        opt.n_runs = c.n_runs > 0 ? c.n_runs : 200;
        opt.fresh_draws = c.fresh_draws;
        opt.delta_eps = 0.005;
        opt.workers = c.workers;
        log("fig4: " + std::to_string(opt.n_runs) + " runs of the R^4 min-ball design");
        const auto study = validate::coverage_study(problem, spec, d, c.seed, opt);
        j["csv"] = write_csv(c, "fig4.csv", [&](std::ostream& os) { study.qhat.write_csv(os); });
        j["result"] = validate::to_json(study);
        ok = study.pass();
    } else if (w == "lemma1") {
        const auto rows = validate::lemma1_check(100000, c.seed);
        j["csv"] = write_csv(c, "lemma1.csv", [&](std::ostream& os) {
            os << "k,n,statistic,plain_statistic,critical,pass\n";
            for (const auto& r : rows) {
                os << r.k << ',' << r.n << ',' << r.statistic << ',' << r.plain_statistic << ',' << r.critical << ','
                   << (r.pass ? "PASS" : "FAIL") << '\n';
            }
        });
        json arr = json::array();
        for (const auto& r : rows) {
            arr.push_back(validate::to_json(r));
            ok = ok && r.pass;
        }
        j["rows"] = arr;
    } else {
        throw CLI::ValidationError("--which", "expected table1|table2|fig1|fig2|fig4|lemma1");
    }
    j["pass"] = ok;
    std::cout << write_json(c, "reproduce_" + w + ".json", j) << '\n';
    return ok ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized scenario design, execution and validation"};
    app.require_subcommand(1);
    Config cfg;

    auto common = [&](CLI::App* sub, bool needs_spec) {
        auto* opt = sub->add_option("--spec", cfg.spec_path, "JSON spec or problem configuration");
        if (needs_spec) opt->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", cfg.seed, "master seed")->capture_default_str();
        sub->add_option("--workers", cfg.workers, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
    };

    auto* design = app.add_subcommand("design", "compute r*, N_trial and the q band");
    common(design, true);
    auto* run = app.add_subcommand("run", "execute the trials and select the solution");
    common(run, true);
    run->add_flag("--dump", cfg.dump, "write per-trial sample CSVs under OUT/dumps");
    run->add_flag("--normalized", cfg.normalized, "scale selection distances by band half-width");
    auto* bnd = app.add_subcommand("bounds", "tabulate confidence bounds over an eps grid");
    common(bnd, true);
    auto* val = app.add_subcommand("validate", "repeat runs and check coverage");
    common(val, true);
    val->add_option("--n-runs", cfg.n_runs, "master seeds (default 200)");
    val->add_option("--fresh-draws", cfg.fresh_draws, "draws per violation estimate")->capture_default_str();
    auto* rep = app.add_subcommand("reproduce", "regenerate table or figure data");
    common(rep, false);
    rep->add_option("--which", cfg.which, "table1|table2|fig1|fig2|fig4|lemma1")
        ->required()
        ->check(CLI::IsMember({"table1", "table2", "fig1", "fig2", "fig4", "lemma1"}));
    rep->add_option("--n-runs", cfg.n_runs, "runs for fig4 (default 200)");
    rep->add_option("--fresh-draws", cfg.fresh_draws, "draws per violation estimate")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, std::cerr, std::cerr);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*design) return cmd_design(cfg);
        if (*run) return cmd_run(cfg);
        if (*bnd) return cmd_bounds(cfg);
        if (*val) return cmd_validate(cfg);
        if (*rep) return cmd_reproduce(cfg);
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << '\n' << app.help();
        return kUsage;
    } catch (const SolverError& e) {
        log(std::string("solver error: ") + e.what());
        return kFailure;
    } catch (const ValidationFailure& e) {
        log(std::string("validation failure: ") + e.what());
        return kFailure;
    } catch (const InfeasibleDesign& e) {
        log(std::string("infeasible design: ") + e.what());
        return kDomain;
    } catch (const DomainError& e) {
        log(std::string("domain error: ") + e.what());
        return kDomain;
    } catch (const ResourceError& e) {
        log(std::string("resource error: ") + e.what());
        return kDomain;
    } catch (const nlohmann::json::exception& e) {
        log(std::string("bad JSON field: ") + e.what());
        return kDomain;
    } catch (const std::exception& e) {
        log(std::string("error: ") + e.what());
        return kDomain;
    }
    return kUsage;
}
