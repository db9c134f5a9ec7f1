#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metaprice/simulator.hpp"

namespace metaprice {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// Feature-distribution declaration for synthetic scenarios.
struct FeatureSpec {
  std::string kind = "uniform";  // "uniform" | "fixed"
  double lo = 0.0;
  double hi = 0.0;
  Vector value;  // "fixed" only
};

/// A full experiment declaration: instance parameters, policy list, and run
/// knobs. Serializes to and from JSON losslessly.
struct ExperimentConfig {
  std::string scenario = "custom";
  int n_epochs = 0;
  int horizon = 0;
  int dim = 0;
  double sigma = 1.0;
  Vector prior_mean;  // length 2d
  Matrix prior_cov;   // 2d x 2d; the environment always knows it
  bool cov_known = true;  // false: policies must not read the matrix
  PriceBounds bounds;
  FeatureSpec features;
  double x_max = 0.0;
  double lambda0 = 0.0;
  double lambda_bar = 0.0;
  double lambda_lower = 0.0;
  double kappa = 0.0;
  double s_bound = 0.0;
  std::vector<PolicyKind> policies;
  int trials = 10;
  std::uint64_t master_seed = 0;
  double rho = 1.0;
  UcbMode ucb_mode = UcbMode::kPaper;
  ScheduleOverrides overrides;
  int threads = 1;
  std::vector<std::string> notes;  // protocol deviations echoed to manifest
};

/// Built-in scenarios. "fig1" (N=1000, T=1000, d=5), "fig2a" (d=1, fixed
/// unit feature), "fig2b" (d=10), "fig3" (covariance unknown, T=2000), and
/// "desk" (N=300, T=300, d=3), a small variant for quick checks.
ExperimentConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// Run-sized exploration-phase lengths with the theoretical growth rules
/// (d^2-order burn-in, sqrt(N) covariance phase, N^{1/4} forced rounds) at
/// constants that fit inside the run: N0 = max(d^2, 4d+2),
/// N1 = max(N0, ceil(2 sqrt(N))), N2 = max(2d+2, ceil(2 N^{1/4})) rounded up
/// to even. Presets and replay defaults use this rule.
ScheduleOverrides pinned_schedule(int n_epochs, int dim);

ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

/// The simulation-facing instance implied by a config (validated).
MetaInstance build_meta_instance(const ExperimentConfig& config);

/// Per-policy extras captured during a run, for the manifest and tests.
struct PolicyDiagnostics {
  /// ||empirical covariance - true covariance||_op per trial, for runs that
  /// freeze a covariance estimate.
  std::vector<double> cov_op_error;
  bool ridge_fallback_used = false;
};

struct ExperimentResult {
  std::vector<PolicyKind> policy_order;
  std::vector<MetaRegretCurve> curves;  // aligned with policy_order
  std::vector<PolicyDiagnostics> diagnostics;
  DerivedConstants constants;
  double n0_theory = 0.0;
  double n1_theory = 0.0;
  double n2_theory = 0.0;
  std::optional<Schedule> schedule;  // when a meta policy ran
  double covariance_bound = 0.0;     // at the schedule actually used
  double wall_seconds = 0.0;
  std::uint64_t master_seed = 0;
  int trials = 0;
};

/// Runs every configured policy paired against the meta oracle,
/// config.trials times, parallel over trials when config.threads > 1.
/// Results are identical for any thread count.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// CSV with columns epoch,policy,mean_cum_meta_regret,stderr,trials.
void write_results_csv(const ExperimentResult& result,
                       const std::string& path);

/// JSON manifest: config echo, derived constants, schedule, seed, wall
/// time, library version, and notes.
void write_manifest(const ExperimentConfig& config,
                    const ExperimentResult& result, const std::string& path);

/// The constants report used by the CLI: c0-c4, R, and the theoretical
/// N0/N1/N2 for the configured instance, as JSON.
std::string constants_report_json(const ExperimentConfig& config);

}  // namespace metaprice
