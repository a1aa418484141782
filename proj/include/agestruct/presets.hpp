#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "agestruct/scenario.hpp"

namespace agestruct {

struct Preset {
    std::string name;
    nlohmann::json document;                    // parse_scenario input
    std::vector<std::string> artifact_defaults;  // parameters chosen here rather than given by the model description
};

// profiles, dynamics, switching, comparison, gradcheck, gradcheck-effort, fbs
const std::vector<std::string>& preset_names();
Preset preset(std::string_view name);
Scenario preset_scenario(std::string_view name);

// Same document on a grid refined `factor` times in age and time. Documents
// without a time grid get the default one for the refined age grid.
nlohmann::json refine_document(nlohmann::json document, int factor);

}  // namespace agestruct
