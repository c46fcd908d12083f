#pragma once

#include <yaml-cpp/yaml.h>

#include <string>

#include "crashrepro/api.hpp"

namespace crashrepro::detail {

std::string location_of(const YAML::Node& node, const std::string& source);
std::string require_scalar(const YAML::Node& node, const char* key, const std::string& source);

// Reads the shared `domains`, `types` and `routines` sections (signatures
// only) used by both scenario files and script target manifests.
void parse_api_surface(const YAML::Node& root, const std::string& source, const std::string& package,
                       const std::string& module, Api& api);

}  // namespace crashrepro::detail
