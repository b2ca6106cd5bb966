#include "kmswkg/presets.hpp"

#include <cmath>

#include "kmswkg/errors.hpp"

namespace kmswkg {

namespace {

constexpr int kV = 0;
constexpr int kW = 1;

Factor dw(int component, Deriv d) { return Factor{component, d}; }

/// Adds the null form (∂_t w)((∂_t w)² - |∇w|²) to output j.
void add_null_cubic(CubicTensor& c, int j, int w) {
  c.add(j, {dw(w, Deriv::t), dw(w, Deriv::t), dw(w, Deriv::t)}, 1.0);
  c.add(j, {dw(w, Deriv::t), dw(w, Deriv::x1), dw(w, Deriv::x1)}, -1.0);
  c.add(j, {dw(w, Deriv::t), dw(w, Deriv::x2), dw(w, Deriv::x2)}, -1.0);
}

void add_kg_coupling(CubicTensor& c, double b) {
  if (b != 0.0) c.add(kV, {dw(kW, Deriv::t), dw(kW, Deriv::t), dw(kW, Deriv::t)}, b);
}

double param(const PresetParams& p, const std::string& key) { return p.at(key); }

SystemSpec kg_wave_pair(const PresetParams& p, CubicTensor c) {
  const double m = param(p, "m");
  if (!(m > 0.0)) throw ConfigError("spec.params.m", "Klein-Gordon mass must be > 0");
  return SystemSpec(2, 1, {m, 0.0}, std::move(c));
}

std::vector<Preset> build_catalog() {
  std::vector<Preset> list;
  list.push_back(Preset{
      "example-kms",
      "(□+m²)v = b(∂_t w)³, □w = -c(∂_a w)²(∂_t w) + (∂_t w)((∂_t w)² - |∇w|²). "
      "Reduced form c ω̂_a² Y³: not null for c ≠ 0, weak condition holds with J = [1] for c ≥ 0.",
      {{"c", 1.0}, {"a", 0.0}, {"b", 1.0}, {"m", 1.0}},
      [](const PresetParams& p) {
        const double a = param(p, "a");
        if (a != 0.0 && a != 1.0 && a != 2.0)
          throw ConfigError("spec.params.a", "derivative index a must be 0, 1 or 2");
        const Deriv da = deriv_from_coordinate(static_cast<int>(a));
        CubicTensor c;
        c.add(kW, {dw(kW, da), dw(kW, da), dw(kW, Deriv::t)}, -param(p, "c"));
        add_null_cubic(c, kW, kW);
        add_kg_coupling(c, param(p, "b"));
        return kg_wave_pair(p, std::move(c));
      }});
  list.push_back(Preset{"example-null",
                        "The c = 0 member of example-kms: □w = (∂_t w)((∂_t w)² - |∇w|²), reduced form ≡ 0.",
                        {{"b", 1.0}, {"m", 1.0}},
                        [](const PresetParams& p) {
                          CubicTensor c;
                          add_null_cubic(c, kW, kW);
                          add_kg_coupling(c, param(p, "b"));
                          return kg_wave_pair(p, std::move(c));
                        }});
  list.push_back(Preset{"kms-violating",
                        "□w = +(∂_t w)³ alone: reduced form -Y³, no positive J exists; profiles blow up.",
                        {{"b", 1.0}, {"m", 1.0}},
                        [](const PresetParams& p) {
                          CubicTensor c;
                          c.add(kW, {dw(kW, Deriv::t), dw(kW, Deriv::t), dw(kW, Deriv::t)}, 1.0);
                          add_kg_coupling(c, param(p, "b"));
                          return kg_wave_pair(p, std::move(c));
                        }});
  list.push_back(Preset{"null-cubic",
                        "Single wave □w = (∂_t w)((∂_t w)² - |∇w|²), the classical cubic null form.",
                        {},
                        [](const PresetParams&) {
                          CubicTensor c;
                          add_null_cubic(c, 0, 0);
                          return SystemSpec(1, 0, {0.0}, std::move(c));
                        }});
  return list;
}

}  // namespace

const std::vector<Preset>& preset_catalog() {
  static const std::vector<Preset> catalog = build_catalog();
  return catalog;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : preset_catalog())
    if (p.name == name) return p;
  std::string known;
  for (const auto& p : preset_catalog()) known += (known.empty() ? "" : ", ") + p.name;
  throw ConfigError("spec.preset", "unknown preset '" + name + "' (known: " + known + ")");
}

SystemSpec make_preset(const std::string& name, const PresetParams& params) {
  const Preset& preset = find_preset(name);
  PresetParams merged = preset.defaults;
  for (const auto& [k, v] : params) {
    if (!merged.count(k)) throw ConfigError("spec.params." + k, "preset '" + name + "' has no parameter '" + k + "'");
    if (!std::isfinite(v)) throw ConfigError("spec.params." + k, "must be finite");
    merged[k] = v;
  }
  return preset.build(merged);
}

}  // namespace kmswkg
