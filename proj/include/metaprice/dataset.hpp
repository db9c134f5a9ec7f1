#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metaprice/simulator.hpp"

namespace metaprice {

/// Column mapping for a historical-pricing CSV: which columns form the epoch
/// key, which hold features, and which hold price and outcome.
struct IngestSchema {
  std::vector<std::string> epoch_key_columns;
  std::vector<std::string> feature_columns;
  std::string price_column;
  std::string outcome_column;
};

IngestSchema parse_schema_json(const std::string& text);
IngestSchema load_schema(const std::string& path);

/// All rows of one epoch (one product), in file order.
struct EpochDataset {
  std::string key;
  std::vector<Vector> features;
  std::vector<double> prices;
  std::vector<double> outcomes;

  int rounds() const { return static_cast<int>(features.size()); }
};

struct IngestResult {
  std::vector<EpochDataset> epochs;  // sorted lexicographically by key
  int dim = 0;
  int dropped_short = 0;  // epochs with fewer than 2d + 2 rows
  std::vector<std::string> log;
};

/// Reads the CSV, groups rows into epochs by the key columns, and drops
/// epochs too short to fit a demand model (< 2d + 2 rows). Throws DataError
/// for duplicate headers, unmapped columns, and non-numeric cells (with the
/// 1-based data row index).
IngestResult ingest_epoch_dataset(const std::string& csv_path,
                                  const IngestSchema& schema);

/// Per-epoch demand fits plus the prior they imply.
struct FittedModels {
  int dim = 0;
  std::vector<EpochDataset> epochs;  // epochs that fit cleanly
  std::vector<Vector> thetas;        // aligned with epochs, length 2d
  Vector prior_mean;
  Matrix prior_cov;  // floored to keep the smallest eigenvalue >= 1e-8
  double sigma_hat = 0.0;  // pooled root-mean-square residual
  double p_min = 0.0;
  double p_max = 0.0;
  int dropped_singular = 0;
  std::vector<std::string> log;
};

/// Ordinary least squares per epoch, then sample mean/covariance across the
/// fitted parameters and the pooled residual scale. Epochs with singular
/// design moments are dropped and logged. Throws DataError when fewer than
/// two epochs remain ("need >= 2 epochs").
FittedModels fit_reference_model(const IngestResult& ingested);

/// Fitted-model archive used by the CLI (ingest writes, replay reads).
void save_fitted_models(const FittedModels& fitted, const std::string& path);
FittedModels load_fitted_models(const std::string& path);

struct ReplayRequest {
  std::vector<PolicyKind> policies;
  int permutations = 0;  // trials; each re-orders rows within every epoch
  std::uint64_t master_seed = 0;
  RunSettings settings;
  bool shuffle_epoch_order = false;  // default: lexicographic key order
};

struct ReplayResult {
  std::vector<PolicyKind> policy_order;
  std::vector<MetaRegretCurve> curves;
  std::vector<std::string> epoch_order;  // keys, as replayed
  double sigma_hat = 0.0;
  int n_epochs = 0;
  double wall_seconds = 0.0;
};

/// Builds the replay instance implied by the fitted models for one
/// permutation trial: fitted parameters as the environment truth, historical
/// features re-ordered by the trial's permutation streams, Gaussian noise at
/// the pooled scale, and the fitted prior for the oracle. Exposed for tests.
MetaInstance build_replay_instance(const FittedModels& fitted,
                                   const std::vector<int>& epoch_order,
                                   const SeedPlan& seeds,
                                   std::uint32_t trial);

/// Runs every requested policy paired against the oracle across permutation
/// trials. Rejects permutations < 1.
ReplayResult run_replay(const FittedModels& fitted,
                        const ReplayRequest& request);

void write_replay_csv(const ReplayResult& result, const std::string& path);
void write_replay_manifest(const FittedModels& fitted,
                           const ReplayRequest& request,
                           const ReplayResult& result,
                           const std::string& path);

}  // namespace metaprice
