#include "meanfield/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "meanfield/analytics.hpp"
#include "meanfield/csv.hpp"
#include "meanfield/errors.hpp"

namespace meanfield {

namespace {

constexpr std::int64_t kMinReplications = 100;
constexpr std::int64_t kChunk = 16;

void check_replications(std::int64_t reps) {
  if (reps < kMinReplications)
    throw ValidationError("replications must be at least " + std::to_string(kMinReplications));
}

/// Evaluates fn(rep) for rep = 0..reps-1 on `threads` workers. Each result
/// lands in its own slot, so the output does not depend on scheduling.
template <typename Record, typename Fn>
std::vector<Record> run_replications(std::int64_t reps, int threads, Fn&& fn) {
  std::vector<Record> out(static_cast<std::size_t>(reps));
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::int64_t error_rep = reps;
  std::exception_ptr error;

  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::int64_t begin = next.fetch_add(kChunk);
      if (begin >= reps) return;
      const std::int64_t end = std::min(begin + kChunk, reps);
      for (std::int64_t r = begin; r < end; ++r) {
        try {
          out[static_cast<std::size_t>(r)] = fn(r);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (r < error_rep) {
            error_rep = r;
            error = std::current_exception();
          }
          failed = true;
          return;
        }
      }
    }
  };

  const int workers = static_cast<int>(std::clamp<std::int64_t>(threads, 1, std::max<std::int64_t>(1, reps / kChunk)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const NumericalError& e) {
      throw NumericalError("replication " + std::to_string(error_rep) + ": " + e.what());
    }
  }
  return out;
}

EstimateWithError binomial_estimate(std::int64_t hits, std::int64_t reps, int n_agents) {
  EstimateWithError est;
  est.replications = reps;
  est.estimate = static_cast<double>(hits) / static_cast<double>(reps);
  est.standard_error = std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(reps));
  if (hits > 0)
    est.log_rate = -std::log(est.estimate) / static_cast<double>(n_agents);
  else
    est.upper_bound = 3.0 / static_cast<double>(reps);
  return est;
}

}  // namespace

Scenario make_scenario(const SystemConfig& config, const ValidationOptions& options) {
  Scenario s;
  s.layout = validate_and_expand(config, options);
  s.grid = make_time_grid(config.T, config.dt);
  s.eta = config.eta;
  s.y0 = config.y0;
  s.T = config.T;
  return s;
}

int default_thread_count() {
  if (const char* env = std::getenv("MEANFIELD_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
    throw ValidationError("MEANFIELD_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string scenario_fingerprint(const Scenario& scenario) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  auto feed = [&h](const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  const auto& l = scenario.layout;
  feed(l.group_alpha.data(), sizeof(double) * static_cast<std::size_t>(l.group_alpha.size()));
  feed(l.group_sigma.data(), sizeof(double) * static_cast<std::size_t>(l.group_sigma.size()));
  feed(l.counts.data(), sizeof(int) * l.counts.size());
  feed(&scenario.grid.n_steps, sizeof(scenario.grid.n_steps));
  feed(&scenario.grid.dt, sizeof(double));
  feed(&scenario.eta, sizeof(double));
  feed(&scenario.y0, sizeof(double));
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

LossDistribution estimate_loss_distribution(const Scenario& scenario, const RunSettings& run) {
  check_replications(run.replications);
  const auto defaults = run_replications<int>(run.replications, run.threads, [&](std::int64_t r) {
    const auto summary = summarize_replication(scenario.layout, scenario.grid, scenario.y0, run.seed,
                                               static_cast<std::uint64_t>(r));
    return detect_defaults(summary, scenario.eta).defaulted_count;
  });

  const int n = scenario.layout.num_agents();
  LossDistribution dist;
  dist.replications = run.replications;
  dist.fingerprint = scenario_fingerprint(scenario);
  dist.counts.assign(static_cast<std::size_t>(n + 1), 0);
  for (int k : defaults) ++dist.counts[static_cast<std::size_t>(k)];
  const auto reps = static_cast<double>(run.replications);
  for (auto c : dist.counts) {
    const double p = static_cast<double>(c) / reps;
    dist.probability.push_back(p);
    dist.standard_error.push_back(std::sqrt(p * (1.0 - p) / reps));
  }
  dist.tail_default_probability = dist.probability.back();
  return dist;
}

LossDistribution estimate_loss_distribution(const SystemConfig& config, const RunSettings& run) {
  return estimate_loss_distribution(make_scenario(config), run);
}

EstimateWithError estimate_systemic_event(const Scenario& scenario, const RunSettings& run) {
  check_replications(run.replications);
  const auto hits = run_replications<char>(run.replications, run.threads, [&](std::int64_t r) {
    const auto summary = summarize_replication(scenario.layout, scenario.grid, scenario.y0, run.seed,
                                               static_cast<std::uint64_t>(r));
    return static_cast<char>(summary.mean_min <= scenario.eta);
  });
  const auto total = std::count(hits.begin(), hits.end(), char{1});
  return binomial_estimate(total, run.replications, scenario.layout.num_agents());
}

EstimateWithError estimate_systemic_event(const SystemConfig& config, const RunSettings& run) {
  return estimate_systemic_event(make_scenario(config), run);
}

EstimateWithError estimate_flocking_exceedance(const Scenario& scenario, int agent, double delta,
                                               const RunSettings& run) {
  check_replications(run.replications);
  if (agent < 0 || agent >= scenario.layout.num_agents())
    throw ValidationError("agent index " + std::to_string(agent) + " out of range");
  if (!(delta > 0.0)) throw ValidationError("delta must be positive");
  const auto hits = run_replications<char>(run.replications, run.threads, [&](std::int64_t r) {
    const auto summary = summarize_replication(scenario.layout, scenario.grid, scenario.y0, run.seed,
                                               static_cast<std::uint64_t>(r));
    return static_cast<char>(summary.max_deviation(agent) > delta);
  });
  const auto total = std::count(hits.begin(), hits.end(), char{1});
  return binomial_estimate(total, run.replications, scenario.layout.num_agents());
}

std::vector<int> scaled_counts(const SystemConfig& base, int n_agents) {
  int g = 0;
  for (const auto& grp : base.groups) g = std::gcd(g, grp.count);
  if (g == 0) throw ValidationError("base config has no agents");
  int ratio_total = 0;
  for (const auto& grp : base.groups) ratio_total += grp.count / g;
  if (n_agents < ratio_total || n_agents % ratio_total != 0) {
    std::ostringstream os;
    os << "N=" << n_agents << " does not preserve the group ratio; admissible N are multiples of "
       << ratio_total << " (" << ratio_total << ", " << 2 * ratio_total << ", "
       << 3 * ratio_total << ", ...)";
    throw ValidationError(os.str());
  }
  std::vector<int> counts;
  for (const auto& grp : base.groups) counts.push_back(grp.count / g * (n_agents / ratio_total));
  return counts;
}

std::vector<ConvergenceRow> convergence_study(const SystemConfig& base,
                                              const std::vector<int>& n_list,
                                              const RunSettings& run, AsymptoteMethod method) {
  const auto base_layout = validate_and_expand(base);
  double v2 = 0.0;
  if (method == AsymptoteMethod::quadrature) {
    v2 = variance_quadrature(base_layout.groups(), base.T).value;
  } else {
    v2 = variance_delta_expansion(expansion_coefficients(base_layout), base_layout, base.T);
  }
  const double asymptote = laplace_tail_approx(v2, 1, base.eta).rate;

  for (int n : n_list) scaled_counts(base, n);  // reject bad N before simulating

  std::vector<ConvergenceRow> rows;
  for (int n : n_list) {
    SystemConfig cfg = base;
    const auto counts = scaled_counts(base, n);
    for (std::size_t k = 0; k < counts.size(); ++k) cfg.groups[k].count = counts[k];
    ConvergenceRow row;
    row.n_agents = n;
    row.p_hat = estimate_systemic_event(cfg, run);
    row.asymptote = asymptote;
    if (row.p_hat.log_rate) row.gap = std::abs(*row.p_hat.log_rate - asymptote) / asymptote;
    rows.push_back(row);
  }
  return rows;
}

std::vector<ExpansionErrorRow> expansion_error_study(const Eigen::VectorXd& direction,
                                                     const Eigen::VectorXd& rho,
                                                     const Eigen::VectorXd& sigma, double alpha_bar,
                                                     double T, const std::vector<double>& deltas,
                                                     double tol) {
  const auto k = direction.size();
  if (k == 0 || rho.size() != k || sigma.size() != k)
    throw ValidationError("direction, rho and sigma must be non-empty and of equal length");
  if (!(alpha_bar > 0.0)) throw ValidationError("alpha_bar must be positive");
  const double scale = std::max(1.0, direction.cwiseAbs().maxCoeff());
  if (std::abs(rho.dot(direction)) > 1e-12 * scale)
    throw ValidationError("direction must satisfy sum_k rho_k c_k = 0");

  std::vector<ExpansionErrorRow> rows;
  for (double delta : deltas) {
    if (delta < 0.0 || !(delta * direction.cwiseAbs().maxCoeff() < 1.0))
      throw ValidationError("delta must be non-negative with delta * |c_k| < 1");
    GroupParameters<double> groups{alpha_bar * (Eigen::VectorXd::Ones(k) + delta * direction), sigma,
                                   rho};
    ExpansionErrorRow row;
    row.delta = delta;
    row.v2_quadrature = variance_quadrature(groups, T, tol).value;
    row.v2_expansion =
        variance_delta_expansion<double>(alpha_bar, delta * direction, sigma, rho, T);
    row.abs_error = std::abs(row.v2_quadrature - row.v2_expansion);
    rows.push_back(row);
  }
  return rows;
}

std::string loss_distribution_csv(const LossDistribution& dist) {
  CsvDocument doc({"defaults", "probability", "stderr"});
  for (std::size_t k = 0; k < dist.probability.size(); ++k)
    doc.field(static_cast<long long>(k)).field(dist.probability[k]).field(dist.standard_error[k]).end_row();
  return doc.str();
}

std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  CsvDocument doc({"N", "p_hat", "log_rate", "asymptote", "gap"});
  for (const auto& r : rows) {
    doc.field(static_cast<long long>(r.n_agents))
        .field(r.p_hat.estimate)
        .field(r.p_hat.log_rate.value_or(nan))
        .field(r.asymptote)
        .field(r.gap.value_or(nan))
        .end_row();
  }
  return doc.str();
}

std::string expansion_csv(const std::vector<ExpansionErrorRow>& rows) {
  CsvDocument doc({"delta", "v2_quad", "v2_hat", "abs_error"});
  for (const auto& r : rows)
    doc.field(r.delta).field(r.v2_quadrature).field(r.v2_expansion).field(r.abs_error).end_row();
  return doc.str();
}

}  // namespace meanfield
