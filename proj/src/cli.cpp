#include "meanfield/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <sstream>
#include <system_error>

#include <CLI11.hpp>

#include "meanfield/analytics.hpp"
#include "meanfield/config_io.hpp"
#include "meanfield/csv.hpp"
#include "meanfield/errors.hpp"
#include "meanfield/montecarlo.hpp"
#include "meanfield/presets.hpp"
#include "meanfield/sde.hpp"

namespace meanfield::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> reps;
  std::string out_dir = ".";
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_config) {
  auto* cfg = cmd->add_option("--config", opts.config_path, "JSON config file");
  if (needs_config) cfg->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "master RNG seed (overrides config)");
  cmd->add_option("--reps", opts.reps, "number of replications (overrides config)");
  cmd->add_option("--out-dir", opts.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--threads", opts.threads, "worker threads (default: MEANFIELD_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
}

RunSettings settings_for(const CommonOptions& opts, const SystemConfig& cfg) {
  RunSettings run;
  run.replications = opts.reps.value_or(cfg.replications);
  run.seed = opts.seed.value_or(cfg.seed);
  run.threads = opts.threads ? *opts.threads : default_thread_count();
  return run;
}

fs::path output_path(const CommonOptions& opts, const std::string& name) {
  fs::create_directories(opts.out_dir);
  return fs::path(opts.out_dir) / name;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(flag + ": cannot parse '" + item + "' as a number");
    }
  }
  if (out.empty()) throw ValidationError(flag + " must list at least one value");
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  for (double v : parse_double_list(text, flag)) {
    if (v != static_cast<int>(v) || v < 1) throw ValidationError(flag + " must list positive integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

void write_report(std::ostream& out, const fs::path& path, const std::string& content,
                  const std::string& summary) {
  write_file_atomic(path, content);
  out << "wrote " << path.string() << ": " << summary << '\n';
}

std::string loss_summary(const LossDistribution& dist) {
  std::ostringstream os;
  os << "tail default probability " << format_double(dist.tail_default_probability) << " (reps "
     << dist.replications << ")";
  return os.str();
}

void emit_trajectories(std::ostream& out, const CommonOptions& opts, const SystemConfig& cfg,
                       std::uint64_t seed, std::uint64_t replication) {
  const auto scenario = make_scenario(cfg);
  const auto traj = simulate_replication(scenario.layout, scenario.grid, scenario.y0, seed, replication);
  const auto rec = detect_defaults(traj, scenario.eta);
  const auto path = output_path(opts, "trajectories.csv");
  write_trajectory_csv(traj, scenario.grid, path);
  out << "wrote " << path.string() << ": " << traj.num_agents() << " agents, "
      << scenario.grid.n_steps + 1 << " grid points, " << rec.defaulted_count << " defaulted, systemic "
      << (rec.systemic ? "yes" : "no") << '\n';
}

void emit_loss(std::ostream& out, const CommonOptions& opts, const SystemConfig& cfg,
               const RunSettings& run, const std::string& file) {
  const auto dist = estimate_loss_distribution(cfg, run);
  write_report(out, output_path(opts, file), loss_distribution_csv(dist), loss_summary(dist));
}

void emit_convergence(std::ostream& out, const CommonOptions& opts, const SystemConfig& cfg,
                      const std::vector<int>& n_list, const RunSettings& run, AsymptoteMethod method) {
  const auto rows = convergence_study(cfg, n_list, run, method);
  std::ostringstream os;
  os << rows.size() << " rows, asymptote " << format_double(rows.front().asymptote);
  write_report(out, output_path(opts, "convergence.csv"), convergence_csv(rows), os.str());
}

void emit_variance(std::ostream& out, const CommonOptions& opts, const SystemConfig& cfg, double tol) {
  const auto layout = validate_and_expand(cfg);
  const auto report = variance_report(layout, cfg.T, tol);
  CsvDocument doc({"method", "value", "T", "tol"});
  doc.field("quadrature").field(report.quadrature.value).field(cfg.T).field(tol).end_row();
  if (report.closed_form_k2)
    doc.field("closed_form_k2").field(*report.closed_form_k2).field(cfg.T).field(0.0).end_row();
  if (report.homogeneous)
    doc.field("homogeneous").field(*report.homogeneous).field(cfg.T).field(0.0).end_row();
  if (report.expansion)
    doc.field("expansion").field(*report.expansion).field(cfg.T).field(0.0).end_row();
  std::ostringstream os;
  os << "V_T^2 = " << format_double(report.quadrature.value) << " (" << report.quadrature.panels
     << " panels)";
  write_report(out, output_path(opts, "variance.csv"), doc.str(), os.str());
}

void emit_flocking(std::ostream& out, const CommonOptions& opts, const SystemConfig& cfg,
                   const RunSettings& run, int agent, double delta) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  const auto scenario = make_scenario(cfg);
  const auto est = estimate_flocking_exceedance(scenario, agent, delta, run);
  double bound = nan, kappa = nan, flock = nan;
  if (scenario.layout.homogeneous_alpha()) {
    const auto fb = flocking_bound(scenario.layout, agent, delta, cfg.T);
    bound = fb.bound_raw;
    kappa = fb.kappa(agent);
    flock = fb.flocking_parameter;
  }
  CsvDocument doc({"agent", "delta", "frequency", "stderr", "bound", "kappa", "F"});
  doc.field(static_cast<long long>(agent)).field(delta).field(est.estimate).field(est.standard_error)
      .field(bound).field(kappa).field(flock).end_row();
  std::ostringstream os;
  os << "exceedance " << format_double(est.estimate) << ", bound " << format_double(bound);
  write_report(out, output_path(opts, "flocking.csv"), doc.str(), os.str());
}

void emit_expansion(std::ostream& out, const CommonOptions& opts, const std::vector<ExpansionErrorRow>& rows) {
  std::ostringstream os;
  os << rows.size() << " rows";
  write_report(out, output_path(opts, "expansion.csv"), expansion_csv(rows), os.str());
}

void reproduce(std::ostream& out, const CommonOptions& opts, const std::string& name) {
  const auto& preset = find_preset(name);
  out << preset.name << ": " << preset.description << '\n';
  switch (preset.kind) {
    case PresetKind::loss_and_paths: {
      const auto& cfg = preset.cases.front().config;
      const auto run = settings_for(opts, cfg);
      emit_trajectories(out, opts, cfg, run.seed, 0);
      emit_loss(out, opts, cfg, run, "loss_hist.csv");
      break;
    }
    case PresetKind::loss_table:
      for (const auto& c : preset.cases)
        emit_loss(out, opts, c.config, settings_for(opts, c.config), "loss_hist_" + c.label + ".csv");
      break;
    case PresetKind::vhat_table: {
      std::vector<ExpansionErrorRow> rows;
      const Eigen::Vector3d c(-60.0, 0.0, 40.0);
      for (const auto& pc : preset.cases) {
        const auto layout = validate_and_expand(pc.config);
        const double alpha_bar = expansion_coefficients(layout).alpha_bar;
        const auto r = expansion_error_study(c, layout.rho, layout.group_sigma, alpha_bar, pc.config.T, {0.001});
        rows.push_back(r.front());
      }
      emit_expansion(out, opts, rows);
      break;
    }
    case PresetKind::convergence: {
      const auto& cfg = preset.cases.front().config;
      emit_convergence(out, opts, cfg, preset.n_list, settings_for(opts, cfg),
                       preset.expansion_asymptote ? AsymptoteMethod::expansion : AsymptoteMethod::quadrature);
      break;
    }
  }
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heterogeneous mean-field diffusions: simulation, loss distributions and V_T^2"};
  app.name("meanfield");
  app.require_subcommand(1);

  CommonOptions opts;
  std::uint64_t replication = 0;
  double tol = 1e-10;
  int agent = 0;
  double delta = 0.0;
  std::string n_list;
  std::string asymptote = "quadrature";
  std::string direction;
  std::optional<double> alpha_bar;
  std::string deltas = "1,0.5,0.25,0.125";
  std::string preset_name;

  auto* simulate = app.add_subcommand("simulate", "write one replication's paths to trajectories.csv");
  add_common(simulate, opts, true);
  simulate->add_option("--replication", replication, "replication index")->capture_default_str();

  auto* loss = app.add_subcommand("loss-dist", "loss distribution over defaulted agents (loss_hist.csv)");
  add_common(loss, opts, true);

  auto* variance = app.add_subcommand("variance", "V_T^2 by every applicable method (variance.csv)");
  add_common(variance, opts, true);
  variance->add_option("--tol", tol, "quadrature absolute tolerance")->capture_default_str();

  auto* flocking = app.add_subcommand("flocking", "flocking exceedance frequency and bound (flocking.csv)");
  add_common(flocking, opts, true);
  flocking->add_option("--agent", agent, "agent index")->capture_default_str();
  flocking->add_option("--delta", delta, "deviation threshold")->required();

  auto* convergence = app.add_subcommand("convergence", "log-rate convergence study (convergence.csv)");
  add_common(convergence, opts, true);
  convergence->add_option("--n-list", n_list, "comma-separated agent counts")->required();
  convergence->add_option("--asymptote", asymptote, "quadrature or expansion")
      ->check(CLI::IsMember({"quadrature", "expansion"}))
      ->capture_default_str();

  auto* expansion = app.add_subcommand("expansion-error", "quadrature vs expansion of V_T^2 (expansion.csv)");
  add_common(expansion, opts, true);
  expansion->add_option("--direction", direction,
                        "comma-separated c_k with sum rho_k c_k = 0 (default: the config's alpha_k/alpha_bar - 1)");
  expansion->add_option("--alpha-bar", alpha_bar, "weighted mean alpha (default: from config)");
  expansion->add_option("--deltas", deltas, "comma-separated delta values")->capture_default_str();

  auto* repro = app.add_subcommand("reproduce", "run a named experiment preset");
  add_common(repro, opts, false);
  std::string preset_help = "one of:";
  for (const auto& p : all_presets()) preset_help += " " + p.name;
  repro->add_option("preset", preset_name, preset_help)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kValidationError;
  }

  if (repro->parsed()) {
    reproduce(out, opts, preset_name);
    return kSuccess;
  }

  const auto cfg = load_config(opts.config_path);
  const auto run = settings_for(opts, cfg);
  if (simulate->parsed()) {
    emit_trajectories(out, opts, cfg, run.seed, replication);
  } else if (loss->parsed()) {
    emit_loss(out, opts, cfg, run, "loss_hist.csv");
  } else if (variance->parsed()) {
    emit_variance(out, opts, cfg, tol);
  } else if (flocking->parsed()) {
    emit_flocking(out, opts, cfg, run, agent, delta);
  } else if (convergence->parsed()) {
    emit_convergence(out, opts, cfg, parse_int_list(n_list, "--n-list"), run,
                     asymptote == "expansion" ? AsymptoteMethod::expansion : AsymptoteMethod::quadrature);
  } else if (expansion->parsed()) {
    const auto layout = validate_and_expand(cfg);
    const auto coeffs = expansion_coefficients(layout);
    Eigen::VectorXd c = coeffs.eps;
    if (!direction.empty()) {
      const auto v = parse_double_list(direction, "--direction");
      if (static_cast<Eigen::Index>(v.size()) != layout.num_groups())
        throw ValidationError("--direction must have one entry per group");
      c = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    const auto rows = expansion_error_study(c, layout.rho, layout.group_sigma,
                                            alpha_bar.value_or(coeffs.alpha_bar), cfg.T,
                                            parse_double_list(deltas, "--deltas"));
    emit_expansion(out, opts, rows);
  }
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }
}

}  // namespace meanfield::cli
