#pragma once

#include <json.hpp>

#include "aip/data/dataset.hpp"

namespace aip {

void to_json(nlohmann::json& j, const ImageShape& s);
void from_json(const nlohmann::json& j, ImageShape& s);
void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

}  // namespace aip
