#pragma once

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "randscen/design.hpp"
#include "randscen/scenario.hpp"

namespace randscen::io {

nlohmann::json to_json(const bounds::SupportBounds& s);
bounds::SupportBounds support_from_json(const nlohmann::json& j);

nlohmann::json to_json(const design::DesignSpec& s);
design::DesignSpec spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const design::TrialDesign& d);
nlohmann::json to_json(const design::MultiDesign& md, const std::vector<design::DesignSpec>& specs);

// A design document is either one spec or {p_prior, m, constraints: [spec, ...]}; shared fields
// are copied into every constraint. Missing supports are filled from `problem` when given.
std::vector<design::DesignSpec> specs_from_document(const nlohmann::json& doc,
                                                    const scenario::ScenarioProblem* problem = nullptr);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace randscen::io
