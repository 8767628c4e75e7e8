#include "randscen/json_io.hpp"

#include <fstream>
#include <sstream>

#include "randscen/errors.hpp"

namespace randscen::io {

using nlohmann::json;

json to_json(const bounds::SupportBounds& s) { return {{"zeta_low", s.zeta_low}, {"zeta_high", s.zeta_high}}; }

bounds::SupportBounds support_from_json(const json& j) {
    bounds::SupportBounds s;
    if (j.is_array()) {
        if (j.size() != 2) throw DomainError("support: expected [zeta_low, zeta_high]");
        s = {j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
    } else if (j.is_object()) {
        s = {j.at("zeta_low").get<std::int64_t>(), j.at("zeta_high").get<std::int64_t>()};
    } else {
        throw DomainError("support: expected an object or a two-element array");
    }
    s.validate();
    return s;
}

json to_json(const design::DesignSpec& s) {
    json j{{"eps_low", s.eps_low},
           {"eps_high", s.eps_high},
           {"p_prior", s.p_prior},
           {"p_post", s.p_post},
           {"m", s.m},
           {"support", to_json(s.support)},
           {"bound_mode", design::to_string(s.bound_mode)},
           {"q_high_rule", design::to_string(s.q_high_rule)}};
    j["r_max"] = s.r_max ? json(*s.r_max) : json(nullptr);
    return j;
}

namespace {

template <class T>
T field(const json& j, const char* name) {
    if (!j.contains(name)) throw DomainError(std::string("design spec: missing field '") + name + "'");
    try {
        return j.at(name).get<T>();
    } catch (const json::exception&) {
        throw DomainError(std::string("design spec: field '") + name + "' has the wrong type");
    }
}

}  // namespace

design::DesignSpec spec_from_json(const json& j) {
    design::DesignSpec s;
    s.eps_low = field<double>(j, "eps_low");
    s.eps_high = field<double>(j, "eps_high");
    s.p_prior = field<double>(j, "p_prior");
    s.p_post = field<double>(j, "p_post");
    s.m = field<std::int64_t>(j, "m");
    if (!j.contains("support")) throw DomainError("design spec: missing field 'support'");
    s.support = support_from_json(j.at("support"));
    if (j.contains("r_max") && !j.at("r_max").is_null()) s.r_max = field<std::int64_t>(j, "r_max");
    if (j.contains("bound_mode")) s.bound_mode = design::parse_bound_mode(field<std::string>(j, "bound_mode"));
    if (j.contains("q_high_rule")) s.q_high_rule = design::parse_q_high_rule(field<std::string>(j, "q_high_rule"));
    s.validate();
    return s;
}

json to_json(const design::TrialDesign& d) {
    return {{"m", d.m},
            {"q_low", d.q_low},
            {"q_high", d.q_high},
            {"r_star", d.r_star},
            {"p_trial", d.p_trial},
            {"n_trials", d.n_trials},
            {"eps_a", d.eps_a},
            {"eps_b", d.eps_b},
            {"delta_eps", d.delta_eps},
            {"guaranteed", d.guaranteed},
            {"posterior_feasible", d.posterior_feasible}};
}

json to_json(const design::MultiDesign& md, const std::vector<design::DesignSpec>& specs) {
    json per = json::array();
    for (std::size_t i = 0; i < md.per_constraint.size(); ++i) {
        json d = to_json(md.per_constraint[i]);
        if (i < specs.size()) d["spec"] = to_json(specs[i]);
        per.push_back(d);
    }
    return {{"constraints", per}, {"p_trial", md.p_trial}, {"p_post", md.p_post}, {"n_trials", md.n_trials}};
}

std::vector<design::DesignSpec> specs_from_document(const json& doc, const scenario::ScenarioProblem* problem) {
    const json& d = doc.contains("design") ? doc.at("design") : doc;
    std::vector<json> items;
    if (d.contains("constraints")) {
        for (const auto& c : d.at("constraints")) {
            json merged = c;
            for (const char* shared : {"p_prior", "m", "bound_mode", "q_high_rule"}) {
                if (d.contains(shared) && !merged.contains(shared)) merged[shared] = d.at(shared);
            }
            items.push_back(merged);
        }
    } else {
        items.push_back(d);
    }
    std::vector<design::DesignSpec> specs;
    for (std::size_t i = 0; i < items.size(); ++i) {
        json item = items[i];
        if (!item.contains("support") && problem) {
            const auto s = problem->support(static_cast<int>(i));
            item["support"] = to_json(s);
        }
        specs.push_back(spec_from_json(item));
    }
    if (specs.empty()) throw DomainError("design document has no constraints");
    return specs;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DomainError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ResourceError("cannot write '" + path + "'");
    out << text;
}

}  // namespace randscen::io
