#include "meanfield/presets.hpp"

#include "meanfield/errors.hpp"

namespace meanfield {

namespace {

constexpr double kEta = -0.7;
constexpr double kHorizon = 1.0;
constexpr double kStep = 1e-3;
constexpr std::uint64_t kSeed = 20170601;

SystemConfig three_groups(const std::array<double, 3>& alpha, const std::array<double, 3>& sigma,
                          const std::array<int, 3>& counts) {
  SystemConfig cfg;
  for (std::size_t k = 0; k < 3; ++k) cfg.groups.push_back({alpha[k], sigma[k], counts[k]});
  cfg.T = kHorizon;
  cfg.dt = kStep;
  cfg.eta = kEta;
  cfg.seed = kSeed;
  return cfg;
}

std::string ratio_label(const std::array<int, 3>& r) {
  return std::to_string(r[0]) + "-" + std::to_string(r[1]) + "-" + std::to_string(r[2]);
}

std::vector<Preset> build_presets() {
  std::vector<Preset> out;
  out.push_back({"group-a", PresetKind::loss_and_paths,
                 "Group A at ratio 2:5:3: sample trajectories and loss distribution",
                 {{"2-5-3", group_a({2, 5, 3})}}, {}, false});
  out.push_back({"group-b", PresetKind::loss_and_paths,
                 "Group B at ratio 2:5:3: sample trajectories and loss distribution",
                 {{"2-5-3", group_b({2, 5, 3})}}, {}, false});

  Preset t1{"table-1", PresetKind::loss_table, "Group A loss distributions for six ratios", {}, {}, false};
  Preset t2{"table-2", PresetKind::loss_table, "Group B loss distributions for six ratios", {}, {}, false};
  for (const auto& r : kTableRatios) {
    t1.cases.push_back({ratio_label(r), group_a(r)});
    t2.cases.push_back({ratio_label(r), group_b(r)});
  }
  out.push_back(t1);
  out.push_back(t2);

  Preset vt{"vhat-table", PresetKind::vhat_table,
            "quadrature vs expansion of V_T^2 for alpha_bar = 10, 50, 100", {}, {}, false};
  for (double ab : {10.0, 50.0, 100.0})
    vt.cases.push_back({"abar-" + std::to_string(static_cast<int>(ab)), vhat_config(ab)});
  out.push_back(vt);

  const std::vector<int> n_list = {10, 20, 30, 40, 50, 60};
  out.push_back({"convergence-a-811", PresetKind::convergence,
                 "Group A 8:1:1, -(1/N) log P(A) against eta^2 / (2 V_T^2)",
                 {{"8-1-1", group_a({8, 1, 1})}}, n_list, false});
  out.push_back({"convergence-a-253", PresetKind::convergence,
                 "Group A 2:5:3, -(1/N) log P(A) against eta^2 / (2 V_T^2)",
                 {{"2-5-3", group_a({2, 5, 3})}}, n_list, false});
  for (int ab : {10, 50, 100}) {
    out.push_back({"convergence-vhat-" + std::to_string(ab), PresetKind::convergence,
                   "alpha_bar = " + std::to_string(ab) +
                       ", -(1/N) log P(A) against eta^2 / (2 Vhat_T^2)",
                   {{"abar-" + std::to_string(ab), vhat_config(ab)}}, n_list, true});
  }
  return out;
}

}  // namespace

SystemConfig group_a(std::array<int, 3> counts) {
  return three_groups({1.0, 10.0, 100.0}, {2.0, 1.0, 0.5}, counts);
}

SystemConfig group_b(std::array<int, 3> counts) {
  return three_groups({1.0, 10.0, 100.0}, {0.5, 1.0, 2.0}, counts);
}

SystemConfig vhat_config(double alpha_bar) {
  constexpr double delta = 0.001;
  constexpr std::array<double, 3> c = {-60.0, 0.0, 40.0};
  std::array<double, 3> alpha{};
  for (std::size_t k = 0; k < 3; ++k) alpha[k] = alpha_bar * (1.0 + delta * c[k]);
  return three_groups(alpha, {5.0, 2.0, 1.0}, {2, 5, 3});
}

const std::vector<Preset>& all_presets() {
  static const std::vector<Preset> presets = build_presets();
  return presets;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : all_presets())
    if (p.name == name) return p;
  std::string known;
  for (const auto& p : all_presets()) known += (known.empty() ? "" : ", ") + p.name;
  throw ValidationError("unknown preset '" + name + "' (known: " + known + ")");
}

}  // namespace meanfield
