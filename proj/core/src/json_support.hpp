#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "perfcost/types.hpp"

namespace perfcost::detail {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

ojson systems_json(const std::vector<SystemSpec>& systems);
// Validates as it reads; errors name `source` and the field path.
std::vector<SystemSpec> systems_from(const json& document, const std::string& source);

json parse_json(const std::string& text, const std::string& source);

std::string hex64(std::uint64_t value);

}  // namespace perfcost::detail
