#include "metaprice.h"

#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include <json.hpp>

#include "metaprice/dataset.hpp"
#include "metaprice/errors.hpp"
#include "metaprice/experiment.hpp"

using metaprice::ConfigError;
using metaprice::DataError;
using metaprice::InfeasibleError;

struct mp_config {
  metaprice::ExperimentConfig cfg;
};

struct mp_result {
  metaprice::ExperimentResult res;
};

struct mp_fitted {
  metaprice::FittedModels fitted;
};

struct mp_replay {
  metaprice::ReplayResult res;
  metaprice::ReplayRequest req;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MP_OK;
  } catch (const ConfigError& e) {
    g_last_error = e.what();
    return MP_ERR_CONFIG;
  } catch (const DataError& e) {
    g_last_error = e.what();
    return MP_ERR_DATA;
  } catch (const InfeasibleError& e) {
    g_last_error = e.what();
    return MP_ERR_INFEASIBLE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return MP_ERR_INTERNAL;
  }
}

int require(bool ok, const char* message) {
  if (ok) return MP_OK;
  g_last_error = message;
  return MP_ERR_CONFIG;
}

char* copy_string(const std::string& s) {
  char* out = new (std::nothrow) char[s.size() + 1];
  if (!out) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<metaprice::PolicyKind> parse_policy_list(const std::string& csv) {
  std::vector<metaprice::PolicyKind> out;
  std::stringstream ss(csv);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const std::size_t b = token.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const std::size_t e = token.find_last_not_of(" \t");
    out.push_back(metaprice::policy_from_name(token.substr(b, e - b + 1)));
  }
  if (out.empty()) throw ConfigError("policy list is empty");
  return out;
}

}  // namespace

extern "C" {

const char* mp_version(void) { return metaprice::kLibraryVersion; }

const char* mp_last_error(void) { return g_last_error.c_str(); }

void mp_string_free(char* s) { delete[] s; }

int mp_config_preset(const char* name, mp_config** out) {
  int rc = require(name && out, "mp_config_preset: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    *out = new mp_config{metaprice::preset_config(name)};
  });
}

int mp_config_load(const char* path, mp_config** out) {
  int rc = require(path && out, "mp_config_load: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    *out = new mp_config{metaprice::load_config(path)};
  });
}

int mp_config_parse(const char* json_text, mp_config** out) {
  int rc = require(json_text && out, "mp_config_parse: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    *out = new mp_config{metaprice::parse_config_json(json_text)};
  });
}

int mp_config_dump(const mp_config* config, char** json_out) {
  int rc = require(config && json_out, "mp_config_dump: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    *json_out = copy_string(metaprice::config_to_json(config->cfg));
    if (!*json_out) throw std::bad_alloc();
  });
}

int mp_config_set_trials(mp_config* config, int trials) {
  int rc = require(config != nullptr, "mp_config_set_trials: null config");
  if (rc != MP_OK) return rc;
  rc = require(trials >= 1, "trials must be >= 1");
  if (rc != MP_OK) return rc;
  config->cfg.trials = trials;
  return MP_OK;
}

int mp_config_set_seed(mp_config* config, uint64_t seed) {
  int rc = require(config != nullptr, "mp_config_set_seed: null config");
  if (rc != MP_OK) return rc;
  config->cfg.master_seed = seed;
  return MP_OK;
}

int mp_config_set_threads(mp_config* config, int threads) {
  int rc = require(config != nullptr, "mp_config_set_threads: null config");
  if (rc != MP_OK) return rc;
  rc = require(threads >= 1, "threads must be >= 1");
  if (rc != MP_OK) return rc;
  config->cfg.threads = threads;
  return MP_OK;
}

int mp_config_set_rho(mp_config* config, double rho) {
  int rc = require(config != nullptr, "mp_config_set_rho: null config");
  if (rc != MP_OK) return rc;
  rc = require(rho >= 1.0, "rho must be >= 1");
  if (rc != MP_OK) return rc;
  config->cfg.rho = rho;
  return MP_OK;
}

int mp_config_set_ucb_mode(mp_config* config, const char* mode) {
  int rc = require(config && mode, "mp_config_set_ucb_mode: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    const std::string m = mode;
    if (m == "paper") {
      config->cfg.ucb_mode = metaprice::UcbMode::kPaper;
    } else if (m == "theory") {
      config->cfg.ucb_mode = metaprice::UcbMode::kTheory;
    } else {
      throw ConfigError("ucb_mode must be \"paper\" or \"theory\"");
    }
  });
}

int mp_config_set_policies(mp_config* config, const char* names) {
  int rc = require(config && names, "mp_config_set_policies: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    config->cfg.policies = parse_policy_list(names);
  });
}

void mp_config_free(mp_config* config) { delete config; }

int mp_run(const mp_config* config, mp_result** out) {
  int rc = require(config && out, "mp_run: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    *out = new mp_result{metaprice::run_experiment(config->cfg)};
  });
}

int mp_result_write_csv(const mp_result* result, const char* path) {
  int rc = require(result && path, "mp_result_write_csv: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] { metaprice::write_results_csv(result->res, path); });
}

int mp_result_write_manifest(const mp_result* result,
                             const mp_config* config, const char* path) {
  int rc = require(result && config && path,
                   "mp_result_write_manifest: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    metaprice::write_manifest(config->cfg, result->res, path);
  });
}

int mp_result_curve(const mp_result* result, const char* policy,
                    double* mean_out, size_t cap, size_t* len_out) {
  int rc = require(result && policy && len_out,
                   "mp_result_curve: null argument");
  if (rc != MP_OK) return rc;
  rc = require(cap == 0 || mean_out != nullptr,
               "mp_result_curve: null buffer with nonzero cap");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    const metaprice::PolicyKind kind = metaprice::policy_from_name(policy);
    for (std::size_t p = 0; p < result->res.policy_order.size(); ++p) {
      if (result->res.policy_order[p] != kind) continue;
      const auto& mean = result->res.curves[p].mean_cumulative;
      *len_out = mean.size();
      const std::size_t n = std::min(cap, mean.size());
      for (std::size_t i = 0; i < n; ++i) mean_out[i] = mean[i];
      return;
    }
    throw ConfigError(std::string("policy not in this result: ") + policy);
  });
}

void mp_result_free(mp_result* result) { delete result; }

int mp_constants_json(const mp_config* config, char** json_out) {
  int rc = require(config && json_out, "mp_constants_json: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    *json_out = copy_string(metaprice::constants_report_json(config->cfg));
    if (!*json_out) throw std::bad_alloc();
  });
}

int mp_ingest(const char* csv_path, const char* schema_path,
              const char* fitted_out_path, char** log_json_out) {
  int rc = require(csv_path && schema_path && fitted_out_path,
                   "mp_ingest: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    const metaprice::IngestSchema schema =
        metaprice::load_schema(schema_path);
    const metaprice::IngestResult ingested =
        metaprice::ingest_epoch_dataset(csv_path, schema);
    const metaprice::FittedModels fitted =
        metaprice::fit_reference_model(ingested);
    metaprice::save_fitted_models(fitted, fitted_out_path);
    if (log_json_out) {
      *log_json_out = copy_string(nlohmann::json(fitted.log).dump());
      if (!*log_json_out) throw std::bad_alloc();
    }
  });
}

int mp_fitted_load(const char* path, mp_fitted** out) {
  int rc = require(path && out, "mp_fitted_load: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    *out = new mp_fitted{metaprice::load_fitted_models(path)};
  });
}

void mp_fitted_free(mp_fitted* fitted) { delete fitted; }

int mp_replay_run(const mp_fitted* fitted, const char* policies,
                  int permutations, uint64_t seed, int shuffle_epochs,
                  double rho, long long exploration_epochs,
                  long long cov_exploration_epochs, long long forced_rounds,
                  mp_replay** out) {
  int rc = require(fitted && policies && out, "mp_replay_run: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    metaprice::ReplayRequest req;
    req.policies = parse_policy_list(policies);
    req.permutations = permutations;
    req.master_seed = seed;
    req.shuffle_epoch_order = shuffle_epochs != 0;
    req.settings.rho = rho;
    req.settings.cov_known = true;
    req.settings.overrides = metaprice::pinned_schedule(
        static_cast<int>(fitted->fitted.epochs.size()), fitted->fitted.dim);
    if (exploration_epochs > 0) {
      req.settings.overrides.exploration_epochs = exploration_epochs;
    }
    if (cov_exploration_epochs > 0) {
      req.settings.overrides.cov_exploration_epochs = cov_exploration_epochs;
    }
    if (forced_rounds > 0) {
      req.settings.overrides.forced_rounds = forced_rounds;
    }
    auto result = metaprice::run_replay(fitted->fitted, req);
    *out = new mp_replay{std::move(result), std::move(req)};
  });
}

int mp_replay_write_csv(const mp_replay* replay, const char* path) {
  int rc = require(replay && path, "mp_replay_write_csv: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] { metaprice::write_replay_csv(replay->res, path); });
}

int mp_replay_write_manifest(const mp_replay* replay,
                             const mp_fitted* fitted, const char* path) {
  int rc = require(replay && fitted && path,
                   "mp_replay_write_manifest: null argument");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    metaprice::write_replay_manifest(fitted->fitted, replay->req,
                                     replay->res, path);
  });
}

void mp_replay_free(mp_replay* replay) { delete replay; }

int mp_optimal_price(const double* alpha, const double* beta,
                     const double* x, int dim, double p_min, double p_max,
                     double* price_out, double* revenue_out) {
  int rc = require(alpha && beta && x && price_out && revenue_out,
                   "mp_optimal_price: null argument");
  if (rc != MP_OK) return rc;
  rc = require(dim >= 1, "mp_optimal_price: dim must be >= 1");
  if (rc != MP_OK) return rc;
  return guarded([&] {
    metaprice::DemandParams theta;
    theta.alpha = Eigen::Map<const metaprice::Vector>(alpha, dim);
    theta.beta = Eigen::Map<const metaprice::Vector>(beta, dim);
    const metaprice::Vector xv =
        Eigen::Map<const metaprice::Vector>(x, dim);
    const metaprice::PriceBounds bounds{p_min, p_max};
    bounds.validate();
    const metaprice::PriceChoice choice =
        metaprice::optimal_price(theta, xv, bounds);
    *price_out = choice.price;
    *revenue_out = choice.expected_revenue;
  });
}

}  // extern "C"
