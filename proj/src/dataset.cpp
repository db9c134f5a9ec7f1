#include "metaprice/dataset.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "metaprice/errors.hpp"

namespace metaprice {
namespace {

using Json = nlohmann::ordered_json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  fields.push_back(field);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, long long data_row,
                  const std::string& column) {
  const std::string token = trim(raw);
  if (!token.empty()) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() + token.size() && std::isfinite(v)) return v;
  }
  throw DataError("non-numeric value '" + raw + "' at data row " +
                  std::to_string(data_row) + ", column '" + column + "'");
}

std::vector<std::string> json_string_array(const Json& j, const char* what) {
  if (!j.is_array()) {
    throw ConfigError(std::string("schema: ") + what + " must be an array");
  }
  return j.get<std::vector<std::string>>();
}

Json vector_to_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vector vector_from_json(const Json& j) {
  const auto vals = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(vals.data(),
                                  static_cast<Eigen::Index>(vals.size()));
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = m(r, c);
    }
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  const std::size_t rows = j.size();
  Matrix m(static_cast<Eigen::Index>(rows),
           static_cast<Eigen::Index>(j.front().size()));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = j.at(r).get<std::vector<double>>();
    for (std::size_t c = 0; c < row.size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
  }
  return m;
}

std::vector<int> permuted_order(int count, StreamRng& rng) {
  std::vector<int> order(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
  for (int i = count - 1; i >= 1; --i) {
    const int k = static_cast<int>(
        rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(k)]);
  }
  return order;
}

}  // namespace

IngestSchema parse_schema_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("schema: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("schema: root must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "epoch_key" && key != "features" && key != "price" &&
        key != "outcome") {
      throw ConfigError("schema: unknown field: " + key);
    }
  }
  for (const char* required : {"epoch_key", "features", "price", "outcome"}) {
    if (!j.contains(required)) {
      throw ConfigError(std::string("schema: missing field: ") + required);
    }
  }
  IngestSchema schema;
  schema.epoch_key_columns = json_string_array(j.at("epoch_key"), "epoch_key");
  schema.feature_columns = json_string_array(j.at("features"), "features");
  schema.price_column = j.at("price").get<std::string>();
  schema.outcome_column = j.at("outcome").get<std::string>();
  if (schema.epoch_key_columns.empty()) {
    throw ConfigError("schema: epoch_key needs at least one column");
  }
  if (schema.feature_columns.empty()) {
    throw ConfigError("schema: features needs at least one column");
  }
  return schema;
}

IngestSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_schema_json(buf.str());
}

IngestResult ingest_epoch_dataset(const std::string& csv_path,
                                  const IngestSchema& schema) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw DataError("cannot open CSV file: " + csv_path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, std::size_t> column_index;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = trim(header[i]);
    if (!column_index.emplace(name, i).second) {
      throw DataError("duplicate column '" + name + "' in CSV header");
    }
  }
  const auto index_of = [&](const std::string& name) -> std::size_t {
    const auto it = column_index.find(name);
    if (it == column_index.end()) {
      throw DataError("schema column '" + name + "' not found in CSV header");
    }
    return it->second;
  };

  std::vector<std::size_t> key_idx, feature_idx;
  for (const std::string& c : schema.epoch_key_columns) {
    key_idx.push_back(index_of(c));
  }
  for (const std::string& c : schema.feature_columns) {
    feature_idx.push_back(index_of(c));
  }
  const std::size_t price_idx = index_of(schema.price_column);
  const std::size_t outcome_idx = index_of(schema.outcome_column);

  const int dim = static_cast<int>(schema.feature_columns.size());
  std::map<std::string, EpochDataset> by_key;
  long long data_row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++data_row;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("data row " + std::to_string(data_row) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    std::string key;
    for (std::size_t i = 0; i < key_idx.size(); ++i) {
      if (i > 0) key.push_back('|');
      key += trim(fields[key_idx[i]]);
    }
    Vector x(dim);
    for (int i = 0; i < dim; ++i) {
      x[i] = parse_cell(fields[feature_idx[static_cast<std::size_t>(i)]],
                        data_row, schema.feature_columns[static_cast<std::size_t>(i)]);
    }
    const double price =
        parse_cell(fields[price_idx], data_row, schema.price_column);
    const double outcome =
        parse_cell(fields[outcome_idx], data_row, schema.outcome_column);

    EpochDataset& epoch = by_key[key];
    if (epoch.features.empty()) epoch.key = key;
    epoch.features.push_back(std::move(x));
    epoch.prices.push_back(price);
    epoch.outcomes.push_back(outcome);
  }
  if (by_key.empty()) throw DataError("CSV has no data rows");

  IngestResult result;
  result.dim = dim;
  const int min_rows = 2 * dim + 2;
  for (auto& [key, epoch] : by_key) {
    if (epoch.rounds() < min_rows) {
      ++result.dropped_short;
      result.log.push_back("dropped epoch '" + key + "': " +
                           std::to_string(epoch.rounds()) + " rows < " +
                           std::to_string(min_rows));
      continue;
    }
    result.epochs.push_back(std::move(epoch));
  }
  result.log.push_back("ingested " + std::to_string(result.epochs.size()) +
                       " epochs, dropped " +
                       std::to_string(result.dropped_short) + " short");
  return result;
}

FittedModels fit_reference_model(const IngestResult& ingested) {
  const int dim = ingested.dim;
  const int two_d = 2 * dim;
  FittedModels fitted;
  fitted.dim = dim;
  fitted.log = ingested.log;

  double residual_sq = 0.0;
  long long residual_rows = 0;
  for (const EpochDataset& epoch : ingested.epochs) {
    Matrix gram = Matrix::Zero(two_d, two_d);
    Vector moment = Vector::Zero(two_d);
    for (int t = 0; t < epoch.rounds(); ++t) {
      const DesignVector m = make_design_vector(
          epoch.features[static_cast<std::size_t>(t)],
          epoch.prices[static_cast<std::size_t>(t)]);
      gram.noalias() += m * m.transpose();
      moment.noalias() += m * epoch.outcomes[static_cast<std::size_t>(t)];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    if (es.info() != Eigen::Success ||
        es.eigenvalues().minCoeff() <= 1e-10) {
      ++fitted.dropped_singular;
      fitted.log.push_back("dropped epoch '" + epoch.key +
                           "': singular design moment");
      continue;
    }
    const Vector theta = gram.ldlt().solve(moment);
    for (int t = 0; t < epoch.rounds(); ++t) {
      const DesignVector m = make_design_vector(
          epoch.features[static_cast<std::size_t>(t)],
          epoch.prices[static_cast<std::size_t>(t)]);
      const double r = epoch.outcomes[static_cast<std::size_t>(t)] -
                       m.dot(theta);
      residual_sq += r * r;
    }
    residual_rows += epoch.rounds();
    fitted.epochs.push_back(epoch);
    fitted.thetas.push_back(theta);
  }

  if (fitted.thetas.size() < 2) {
    throw DataError(
        "reference model: need >= 2 epochs with well-conditioned data");
  }

  const auto n = static_cast<double>(fitted.thetas.size());
  Vector mean = Vector::Zero(two_d);
  for (const Vector& th : fitted.thetas) mean += th;
  mean /= n;
  Matrix cov = Matrix::Zero(two_d, two_d);
  for (const Vector& th : fitted.thetas) {
    const Vector c = th - mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= (n - 1.0);
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<Matrix>(cov).eigenvalues().minCoeff();
  const double floor_eps = std::max(0.0, 1e-8 - min_eig);
  if (floor_eps > 0.0) {
    cov += floor_eps * Matrix::Identity(two_d, two_d);
    fitted.log.push_back("covariance floored: min eigenvalue raised to 1e-8");
  }
  fitted.prior_mean = mean;
  fitted.prior_cov = cov;
  fitted.sigma_hat =
      std::sqrt(residual_sq / static_cast<double>(residual_rows));
  // A residual scale at floating-point rounding level is an exact fit, not a
  // noise estimate; posterior updates at that scale are numerically
  // meaningless, while sigma = 0 cleanly disables belief updates downstream.
  double outcome_sq = 0.0;
  for (const EpochDataset& epoch : fitted.epochs) {
    for (double y : epoch.outcomes) outcome_sq += y * y;
  }
  const double outcome_rms =
      std::sqrt(outcome_sq / static_cast<double>(residual_rows));
  if (fitted.sigma_hat <= 1e-10 * std::max(1.0, outcome_rms)) {
    fitted.sigma_hat = 0.0;
    fitted.log.push_back(
        "residual scale below numerical precision; noise treated as zero");
  }

  double p_min = std::numeric_limits<double>::infinity();
  double p_max = -std::numeric_limits<double>::infinity();
  for (const EpochDataset& epoch : fitted.epochs) {
    for (double p : epoch.prices) {
      p_min = std::min(p_min, p);
      p_max = std::max(p_max, p);
    }
  }
  if (!(p_min > 0.0)) {
    throw DataError("replay needs strictly positive prices; observed minimum "
                    "is " + std::to_string(p_min));
  }
  if (!(p_min < p_max)) {
    throw DataError("replay needs price variation; all observed prices equal");
  }
  fitted.p_min = p_min;
  fitted.p_max = p_max;
  return fitted;
}

void save_fitted_models(const FittedModels& fitted, const std::string& path) {
  Json j;
  j["version"] = 1;
  j["dim"] = fitted.dim;
  j["sigma_hat"] = fitted.sigma_hat;
  j["p_min"] = fitted.p_min;
  j["p_max"] = fitted.p_max;
  j["prior_mean"] = vector_to_json(fitted.prior_mean);
  j["prior_cov"] = matrix_to_json(fitted.prior_cov);
  j["dropped_singular"] = fitted.dropped_singular;
  j["log"] = fitted.log;
  Json epochs = Json::array();
  for (std::size_t i = 0; i < fitted.epochs.size(); ++i) {
    Json e;
    e["key"] = fitted.epochs[i].key;
    e["theta"] = vector_to_json(fitted.thetas[i]);
    Json rows = Json::array();
    for (const Vector& x : fitted.epochs[i].features) {
      rows.push_back(vector_to_json(x));
    }
    e["features"] = rows;
    epochs.push_back(std::move(e));
  }
  j["epochs"] = std::move(epochs);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open output file: " + path);
  out << j.dump() << '\n';
  if (!out) throw DataError("failed while writing output file: " + path);
}

FittedModels load_fitted_models(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open fitted-model file: " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw DataError(std::string("fitted-model file: invalid JSON: ") +
                    e.what());
  }
  FittedModels fitted;
  try {
    fitted.dim = j.at("dim").get<int>();
    fitted.sigma_hat = j.at("sigma_hat").get<double>();
    fitted.p_min = j.at("p_min").get<double>();
    fitted.p_max = j.at("p_max").get<double>();
    fitted.prior_mean = vector_from_json(j.at("prior_mean"));
    fitted.prior_cov = matrix_from_json(j.at("prior_cov"));
    fitted.dropped_singular = j.value("dropped_singular", 0);
    if (j.contains("log")) {
      fitted.log = j.at("log").get<std::vector<std::string>>();
    }
    for (const Json& e : j.at("epochs")) {
      EpochDataset epoch;
      epoch.key = e.at("key").get<std::string>();
      for (const Json& row : e.at("features")) {
        epoch.features.push_back(vector_from_json(row));
      }
      fitted.epochs.push_back(std::move(epoch));
      fitted.thetas.push_back(vector_from_json(e.at("theta")));
    }
  } catch (const std::exception& e) {
    throw DataError(std::string("fitted-model file: ") + e.what());
  }
  if (fitted.epochs.size() != fitted.thetas.size() ||
      fitted.epochs.size() < 2) {
    throw DataError("fitted-model file: need >= 2 epochs");
  }
  return fitted;
}

MetaInstance build_replay_instance(const FittedModels& fitted,
                                   const std::vector<int>& epoch_order,
                                   const SeedPlan& seeds,
                                   std::uint32_t trial) {
  const int n_epochs = static_cast<int>(epoch_order.size());
  const int dim = fitted.dim;
  MetaInstance meta;
  meta.n_epochs = n_epochs;
  meta.dim = dim;
  meta.bounds = PriceBounds{fitted.p_min, fitted.p_max};
  meta.sigma = fitted.sigma_hat;
  meta.prior_mean = fitted.prior_mean;
  meta.prior_cov = fitted.prior_cov;
  meta.kappa = fitted.prior_cov.trace();
  meta.s_bound = 2.0 * fitted.prior_mean.norm() + 1.0;

  Eigen::SelfAdjointEigenSolver<Matrix> prior_es(fitted.prior_cov);
  meta.lambda_bar = prior_es.eigenvalues().maxCoeff();
  meta.lambda_lower = prior_es.eigenvalues().minCoeff();

  double x_max = 0.0;
  double lambda0 = std::numeric_limits<double>::infinity();
  for (int e = 0; e < n_epochs; ++e) {
    const EpochDataset& epoch =
        fitted.epochs[static_cast<std::size_t>(epoch_order[e])];
    Matrix second_moment = Matrix::Zero(dim, dim);
    for (const Vector& x : epoch.features) {
      x_max = std::max(x_max, x.norm());
      second_moment.noalias() += x * x.transpose();
    }
    second_moment /= static_cast<double>(epoch.rounds());
    lambda0 = std::min(lambda0,
                       Eigen::SelfAdjointEigenSolver<Matrix>(second_moment)
                           .eigenvalues()
                           .minCoeff());

    StreamRng perm_rng =
        seeds.stream(StreamPurpose::kPermutation, 0, trial,
                     static_cast<std::uint32_t>(e + 1), 0);
    meta.epoch_samplers.push_back(std::make_shared<HistoricalSampler>(
        epoch.features, permuted_order(epoch.rounds(), perm_rng)));
    meta.horizons.push_back(epoch.rounds());
    meta.fixed_thetas.push_back(
        fitted.thetas[static_cast<std::size_t>(epoch_order[e])]);
  }
  meta.x_max = x_max;
  if (!(lambda0 > 0.0)) {
    throw DataError(
        "replay features are degenerate: some epoch's feature second moment "
        "is singular");
  }
  meta.lambda0 = lambda0;
  meta.validate();
  return meta;
}

ReplayResult run_replay(const FittedModels& fitted,
                        const ReplayRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  if (request.permutations < 1) {
    throw ConfigError("replay needs at least one permutation trial");
  }
  if (request.policies.empty()) {
    throw ConfigError("replay needs at least one policy");
  }
  const SeedPlan seeds(request.master_seed);

  const int n_epochs = static_cast<int>(fitted.epochs.size());
  std::vector<int> order(static_cast<std::size_t>(n_epochs));
  for (int i = 0; i < n_epochs; ++i) order[static_cast<std::size_t>(i)] = i;
  if (request.shuffle_epoch_order) {
    StreamRng rng = seeds.stream(StreamPurpose::kEpochOrder, 0, 0, 0, 0);
    order = permuted_order(n_epochs, rng);
  }

  ReplayResult result;
  result.policy_order = request.policies;
  result.sigma_hat = fitted.sigma_hat;
  result.n_epochs = n_epochs;
  for (int idx : order) {
    result.epoch_order.push_back(
        fitted.epochs[static_cast<std::size_t>(idx)].key);
  }

  std::vector<std::vector<std::vector<double>>> per_policy_trials(
      request.policies.size());
  for (int k = 0; k < request.permutations; ++k) {
    const MetaInstance meta = build_replay_instance(
        fitted, order, seeds, static_cast<std::uint32_t>(k));
    if (k == 0) validate_lambda0(meta, seeds);
    const PolicyRunResult oracle =
        run_meta_policy_trial(PolicyKind::kMetaOracle, meta, request.settings,
                              seeds, static_cast<std::uint32_t>(k));
    for (std::size_t p = 0; p < request.policies.size(); ++p) {
      const PolicyRunResult candidate =
          run_meta_policy_trial(request.policies[p], meta, request.settings,
                                seeds, static_cast<std::uint32_t>(k));
      per_policy_trials[p].push_back(cumulative_regret(oracle, candidate));
    }
  }
  for (const auto& trials : per_policy_trials) {
    result.curves.push_back(aggregate_trials(trials));
  }
  const auto stop = std::chrono::steady_clock::now();
  result.wall_seconds = std::chrono::duration<double>(stop - start).count();
  return result;
}

void write_replay_csv(const ReplayResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open output file: " + path);
  out << "epoch,policy,mean_cum_meta_regret,stderr,trials\n";
  char buf[64];
  for (std::size_t p = 0; p < result.policy_order.size(); ++p) {
    const MetaRegretCurve& curve = result.curves[p];
    const char* name = policy_name(result.policy_order[p]);
    for (std::size_t e = 0; e < curve.mean_cumulative.size(); ++e) {
      out << (e + 1) << ',' << name << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", curve.mean_cumulative[e]);
      out << buf << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", curve.stderr_cumulative[e]);
      out << buf << ',' << curve.trials << '\n';
    }
  }
  if (!out) throw DataError("failed while writing output file: " + path);
}

void write_replay_manifest(const FittedModels& fitted,
                           const ReplayRequest& request,
                           const ReplayResult& result,
                           const std::string& path) {
  Json j;
  j["version"] = 1;
  j["seed"] = request.master_seed;
  j["permutations"] = request.permutations;
  Json names = Json::array();
  for (PolicyKind p : request.policies) names.push_back(policy_name(p));
  j["policies"] = names;
  j["n_epochs"] = result.n_epochs;
  j["dim"] = fitted.dim;
  j["sigma_hat"] = fitted.sigma_hat;
  j["p_min"] = fitted.p_min;
  j["p_max"] = fitted.p_max;
  j["rho"] = request.settings.rho;
  j["cov_known"] = request.settings.cov_known;
  j["shuffled_epoch_order"] = request.shuffle_epoch_order;
  if (request.settings.overrides.exploration_epochs) {
    j["exploration_epochs"] = *request.settings.overrides.exploration_epochs;
  }
  if (request.settings.overrides.cov_exploration_epochs) {
    j["cov_exploration_epochs"] =
        *request.settings.overrides.cov_exploration_epochs;
  }
  if (request.settings.overrides.forced_rounds) {
    j["forced_rounds"] = *request.settings.overrides.forced_rounds;
  }
  j["epoch_order"] = result.epoch_order;
  j["wall_seconds"] = result.wall_seconds;
  j["notes"] = Json::array(
      {"semi-synthetic replay: fitted parameters are the ground truth and "
       "outcomes are resimulated with Gaussian noise at the pooled scale"});

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open output file: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed while writing output file: " + path);
}

}  // namespace metaprice
