#pragma once

#include <array>
#include <string>
#include <vector>

#include "meanfield/model.hpp"

namespace meanfield {

/// Experiment families reproduced by `reproduce <preset>`.
enum class PresetKind { loss_and_paths, loss_table, vhat_table, convergence };

struct PresetCase {
  std::string label;  // used in output file names
  SystemConfig config;
};

struct Preset {
  std::string name;
  PresetKind kind;
  std::string description;
  std::vector<PresetCase> cases;
  std::vector<int> n_list;  // convergence presets only
  bool expansion_asymptote = false;
};

/// Group A: {(1,2),(10,1),(100,0.5)}; Group B: {(1,0.5),(10,1),(100,2)}.
SystemConfig group_a(std::array<int, 3> counts);
SystemConfig group_b(std::array<int, 3> counts);

/// sigma = (5,2,1), counts 2:5:3, alpha_k = alpha_bar (1 + 0.001 c_k), c = (-60,0,40).
SystemConfig vhat_config(double alpha_bar);

inline constexpr std::array<std::array<int, 3>, 6> kTableRatios = {
    {{8, 1, 1}, {1, 8, 1}, {1, 1, 8}, {5, 3, 2}, {2, 5, 3}, {2, 3, 5}}};

const std::vector<Preset>& all_presets();

/// Throws ValidationError listing known names.
const Preset& find_preset(const std::string& name);

}  // namespace meanfield
