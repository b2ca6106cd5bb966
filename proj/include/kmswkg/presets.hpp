#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "kmswkg/nonlinearity.hpp"

namespace kmswkg {

using PresetParams = std::map<std::string, double>;

struct Preset {
  std::string name;
  std::string doc;
  PresetParams defaults;
  std::function<SystemSpec(const PresetParams&)> build;
};

const std::vector<Preset>& preset_catalog();

/// Throws ConfigError("spec.preset") for unknown names.
const Preset& find_preset(const std::string& name);

/// Builds a preset, overriding defaults; unknown parameters are ConfigErrors.
SystemSpec make_preset(const std::string& name, const PresetParams& params = {});

}  // namespace kmswkg
