#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "randscen/bounds.hpp"
#include "randscen/design.hpp"
#include "randscen/engine.hpp"
#include "randscen/errors.hpp"
#include "randscen/json_io.hpp"
#include "randscen/specfun.hpp"
#include "randscen/validate.hpp"

namespace py = pybind11;
using namespace randscen;
using nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& obj) {
    return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

bounds::SupportBounds support_of(const std::pair<std::int64_t, std::int64_t>& s) {
    bounds::SupportBounds b{s.first, s.second};
    b.validate();
    return b;
}

struct Designed {
    std::unique_ptr<scenario::ScenarioProblem> problem;
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

Designed design_of(const json& doc, unsigned workers) {
    Designed d;
    if (doc.contains("problem")) {
        const json& p = doc.at("problem");
        d.problem = scenario::make_problem(p.is_string() ? json{{"problem", p}} : p);
    }
    d.specs = io::specs_from_document(doc, d.problem.get());
    if (d.specs.size() == 1) {
        d.designs.push_back(design::make_design(d.specs.front(), workers));
    } else {
        d.multi = design::multi_design(d.specs, workers);
        d.designs = d.multi->per_constraint;
    }
    return d;
}

const scenario::ScenarioProblem& need_problem(const Designed& d) {
    if (!d.problem) throw DomainError("document has no 'problem' field");
    return *d.problem;
}

}  // namespace

PYBIND11_MODULE(_randscen, m) {
    m.doc() = "Randomized scenario design: binomial bounds, trial design and seeded runs";

    py::register_exception<InfeasibleDesign>(m, "InfeasibleDesign");
    py::register_exception<SolverError>(m, "SolverError");
    py::register_exception<ResourceError>(m, "ResourceError");
    py::register_exception<ValidationFailure>(m, "ValidationFailure");

    m.def("binom_cdf", &specfun::binom_cdf, py::arg("n"), py::arg("N"), py::arg("p"));
    m.def("binom_sf", &specfun::binom_sf, py::arg("n"), py::arg("N"), py::arg("p"));
    m.def("incomplete_beta_reg", &specfun::incomplete_beta_reg, py::arg("a"), py::arg("b"), py::arg("x"));
    m.def("binom_cdf_inv_eps", &specfun::binom_cdf_inv_eps, py::arg("n"), py::arg("N"), py::arg("target"),
          "eps with binom_cdf(n, N, 1 - eps) = target");

    m.def(
        "levelq_interval",
        [](std::int64_t q, std::int64_t mm, std::pair<std::int64_t, std::int64_t> s, double eps) {
            const auto iv = bounds::levelq_interval(q, mm, support_of(s), eps);
            return std::make_pair(iv.lower, iv.upper);
        },
        py::arg("q"), py::arg("m"), py::arg("support"), py::arg("eps"));
    m.def("selection_prob_exact", &bounds::selection_prob_exact, py::arg("r"), py::arg("q"), py::arg("m"), py::arg("k"));
    m.def(
        "selection_prob_bounds",
        [](std::int64_t r, std::int64_t q, std::int64_t mm, std::pair<std::int64_t, std::int64_t> s) {
            const auto iv = bounds::selection_prob_bounds(r, q, mm, support_of(s));
            return std::make_pair(iv.lower, iv.upper);
        },
        py::arg("r"), py::arg("q"), py::arg("m"), py::arg("support"));
    m.def("psi_campi", &bounds::psi_campi, py::arg("q"), py::arg("zeta_high"), py::arg("m"), py::arg("eps"));
    m.def("psi_campi_raw", &bounds::psi_campi_raw, py::arg("q"), py::arg("zeta_high"), py::arg("m"), py::arg("eps"));
    m.def("n_trials", &design::n_trials, py::arg("p_prior"), py::arg("p_post"), py::arg("p_trial"));

    m.def(
        "design",
        [](const py::dict& doc, unsigned workers) {
            const json j = from_py(doc);
            json out;
            {
                py::gil_scoped_release nogil;
                out = design_of(j, workers).to_json();
            }
            return to_py(out);
        },
        py::arg("doc"), py::arg("workers") = 1,
        "Design document (one spec or {constraints: [...]}) to the design record written by the CLI");

    m.def(
        "run",
        [](const py::dict& doc, std::uint64_t seed, unsigned workers, bool normalized) {
            const json j = from_py(doc);
            json out;
            {
                py::gil_scoped_release nogil;
                const auto d = design_of(j, workers);
                engine::RunOptions opt;
                opt.workers = workers;
                opt.normalized_selection = normalized;
                out = engine::to_json(engine::run(need_problem(d), d.plan(), seed, opt));
                out["problem"] = d.problem->config();
                out["design"] = d.to_json();
            }
            return to_py(out);
        },
        py::arg("doc"), py::arg("seed"), py::arg("workers") = 1, py::arg("normalized_selection") = false);

    m.def(
        "coverage",
        [](const py::dict& doc, std::uint64_t seed, std::int64_t n_runs, std::int64_t fresh_draws, unsigned workers) {
            const json j = from_py(doc);
            json out;
            {
                py::gil_scoped_release nogil;
                const auto d = design_of(j, workers);
                if (d.specs.size() != 1) throw DomainError("coverage: single-constraint documents only");
                validate::CoverageOptions opt;
                opt.n_runs = n_runs;
                opt.fresh_draws = fresh_draws;
                opt.workers = workers;
                out = validate::to_json(validate::coverage_study(need_problem(d), d.specs[0], d.designs[0], seed, opt));
            }
            return to_py(out);
        },
        py::arg("doc"), py::arg("seed"), py::arg("n_runs") = 200, py::arg("fresh_draws") = 100000,
        py::arg("workers") = 1);

    m.def(
        "reproduce",
        [](const std::string& which, unsigned workers) {
            json out;
            {
                py::gil_scoped_release nogil;
                if (which == "table1") {
                    out = validate::to_json(validate::reproduce_table1(workers));
                } else if (which == "table2") {
                    out = validate::to_json(validate::reproduce_table2(workers));
                } else {
                    throw DomainError("reproduce: expected 'table1' or 'table2'");
                }
            }
            return to_py(out);
        },
        py::arg("which"), py::arg("workers") = 1);
}
