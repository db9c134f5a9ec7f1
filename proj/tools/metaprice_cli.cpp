// Command-line front end: run synthetic experiments, ingest historical
// pricing CSVs, replay policies against fitted models, and report the
// derived schedule constants. Built entirely on the C API.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "metaprice.h"

namespace {

int fail(int code, const char* context) {
  std::fprintf(stderr, "error: %s: %s\n", context, mp_last_error());
  return code;
}

int ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    std::fprintf(stderr, "error: cannot create output directory %s: %s\n",
                 dir.c_str(), ec.message().c_str());
    return MP_ERR_DATA;
  }
  return MP_OK;
}

struct ConfigArgs {
  std::string preset;
  std::string config_path;
  std::string policies;
  std::string ucb_mode;
  int trials = 0;
  bool has_seed = false;
  std::uint64_t seed = 0;
  double rho = 0.0;
  int threads = 0;
};

void add_config_options(CLI::App* cmd, ConfigArgs* args,
                        bool with_run_knobs) {
  auto* preset = cmd->add_option("--preset", args->preset,
                                 "built-in scenario: fig1, fig2a, fig2b, "
                                 "fig3, desk");
  auto* config = cmd->add_option("--config", args->config_path,
                                 "JSON config file");
  preset->excludes(config);
  config->excludes(preset);
  if (with_run_knobs) {
    cmd->add_option("--trials", args->trials, "number of trials");
    cmd->add_option("--seed", args->seed, "master seed")
        ->each([args](const std::string&) { args->has_seed = true; });
    cmd->add_option("--policies", args->policies,
                    "comma-separated policy names");
    cmd->add_option("--rho", args->rho, "prior-widening strength (>= 1)");
    cmd->add_option("--ucb-mode", args->ucb_mode,
                    "optimism bonus: paper or theory");
    cmd->add_option("--threads", args->threads,
                    "worker threads over trials (results identical)");
  }
}

int make_config(const ConfigArgs& args, mp_config** out) {
  int rc;
  if (!args.preset.empty()) {
    rc = mp_config_preset(args.preset.c_str(), out);
  } else if (!args.config_path.empty()) {
    rc = mp_config_load(args.config_path.c_str(), out);
  } else {
    std::fprintf(stderr, "error: pass --preset or --config\n");
    return MP_ERR_CONFIG;
  }
  if (rc != MP_OK) return fail(rc, "loading config");
  mp_config* cfg = *out;
  if (args.trials > 0 && (rc = mp_config_set_trials(cfg, args.trials))) {
    return fail(rc, "--trials");
  }
  if (args.has_seed && (rc = mp_config_set_seed(cfg, args.seed))) {
    return fail(rc, "--seed");
  }
  if (!args.policies.empty() &&
      (rc = mp_config_set_policies(cfg, args.policies.c_str()))) {
    return fail(rc, "--policies");
  }
  if (args.rho > 0.0 && (rc = mp_config_set_rho(cfg, args.rho))) {
    return fail(rc, "--rho");
  }
  if (!args.ucb_mode.empty() &&
      (rc = mp_config_set_ucb_mode(cfg, args.ucb_mode.c_str()))) {
    return fail(rc, "--ucb-mode");
  }
  if (args.threads > 0 && (rc = mp_config_set_threads(cfg, args.threads))) {
    return fail(rc, "--threads");
  }
  return MP_OK;
}

int cmd_run(const ConfigArgs& args, const std::string& out_dir) {
  mp_config* cfg = nullptr;
  int rc = make_config(args, &cfg);
  if (rc != MP_OK) {
    mp_config_free(cfg);
    return rc;
  }
  if ((rc = ensure_dir(out_dir)) != MP_OK) {
    mp_config_free(cfg);
    return rc;
  }
  mp_result* result = nullptr;
  if ((rc = mp_run(cfg, &result)) != MP_OK) {
    mp_config_free(cfg);
    return fail(rc, "running experiment");
  }
  const std::string csv = out_dir + "/results.csv";
  const std::string manifest = out_dir + "/manifest.json";
  if ((rc = mp_result_write_csv(result, csv.c_str())) != MP_OK) {
    rc = fail(rc, "writing results CSV");
  } else if ((rc = mp_result_write_manifest(result, cfg,
                                            manifest.c_str())) != MP_OK) {
    rc = fail(rc, "writing manifest");
  } else {
    std::printf("wrote %s\nwrote %s\n", csv.c_str(), manifest.c_str());
  }
  mp_result_free(result);
  mp_config_free(cfg);
  return rc;
}

int cmd_constants(const ConfigArgs& args) {
  mp_config* cfg = nullptr;
  int rc = make_config(args, &cfg);
  if (rc != MP_OK) {
    mp_config_free(cfg);
    return rc;
  }
  char* json = nullptr;
  if ((rc = mp_constants_json(cfg, &json)) != MP_OK) {
    mp_config_free(cfg);
    return fail(rc, "computing constants");
  }
  std::printf("%s\n", json);
  mp_string_free(json);
  mp_config_free(cfg);
  return MP_OK;
}

int cmd_ingest(const std::string& csv, const std::string& schema,
               const std::string& out_dir) {
  int rc = ensure_dir(out_dir);
  if (rc != MP_OK) return rc;
  const std::string fitted_path = out_dir + "/fitted.json";
  char* log_json = nullptr;
  rc = mp_ingest(csv.c_str(), schema.c_str(), fitted_path.c_str(), &log_json);
  if (rc != MP_OK) return fail(rc, "ingesting data");
  std::printf("wrote %s\nlog: %s\n", fitted_path.c_str(), log_json);
  mp_string_free(log_json);
  return MP_OK;
}

struct ReplayArgs {
  std::string fitted_path;
  std::string policies = "meta-dp,greedy,prior-free";
  int permutations = 10;
  std::uint64_t seed = 0;
  bool shuffle_epochs = false;
  double rho = 1.0;
  long long exploration_epochs = 0;
  long long cov_exploration_epochs = 0;
  long long forced_rounds = 0;
};

int cmd_replay(const ReplayArgs& args, const std::string& out_dir) {
  int rc = ensure_dir(out_dir);
  if (rc != MP_OK) return rc;
  mp_fitted* fitted = nullptr;
  if ((rc = mp_fitted_load(args.fitted_path.c_str(), &fitted)) != MP_OK) {
    return fail(rc, "loading fitted models");
  }
  mp_replay* replay = nullptr;
  rc = mp_replay_run(fitted, args.policies.c_str(), args.permutations,
                     args.seed, args.shuffle_epochs ? 1 : 0, args.rho,
                     args.exploration_epochs, args.cov_exploration_epochs,
                     args.forced_rounds, &replay);
  if (rc != MP_OK) {
    mp_fitted_free(fitted);
    return fail(rc, "running replay");
  }
  const std::string csv = out_dir + "/replay.csv";
  const std::string manifest = out_dir + "/replay_manifest.json";
  if ((rc = mp_replay_write_csv(replay, csv.c_str())) != MP_OK) {
    rc = fail(rc, "writing replay CSV");
  } else if ((rc = mp_replay_write_manifest(replay, fitted,
                                            manifest.c_str())) != MP_OK) {
    rc = fail(rc, "writing replay manifest");
  } else {
    std::printf("wrote %s\nwrote %s\n", csv.c_str(), manifest.c_str());
  }
  mp_replay_free(replay);
  mp_fitted_free(fitted);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("meta-pricing simulator (library ") +
               mp_version() + ")"};
  app.require_subcommand(1);

  ConfigArgs run_args;
  std::string run_out = ".";
  CLI::App* run = app.add_subcommand(
      "run", "simulate configured policies against the meta oracle");
  add_config_options(run, &run_args, true);
  run->add_option("--out", run_out, "output directory");

  ConfigArgs const_args;
  CLI::App* constants = app.add_subcommand(
      "constants", "print derived schedule constants for a config");
  add_config_options(constants, &const_args, false);

  std::string ingest_csv, ingest_schema, ingest_out = ".";
  CLI::App* ingest = app.add_subcommand(
      "ingest", "fit per-epoch demand models from a historical CSV");
  ingest->add_option("--csv", ingest_csv, "input CSV file")->required();
  ingest->add_option("--schema", ingest_schema, "JSON column mapping")
      ->required();
  ingest->add_option("--out", ingest_out, "output directory");

  ReplayArgs replay_args;
  std::string replay_out = ".";
  CLI::App* replay = app.add_subcommand(
      "replay", "replay policies against fitted historical models");
  replay->add_option("--fitted", replay_args.fitted_path,
                     "fitted.json from ingest")->required();
  replay->add_option("--permutations", replay_args.permutations,
                     "permutation trials");
  replay->add_option("--seed", replay_args.seed, "master seed");
  replay->add_option("--policies", replay_args.policies,
                     "comma-separated policy names");
  replay->add_flag("--shuffle-epochs", replay_args.shuffle_epochs,
                   "shuffle epoch order once (seeded)");
  replay->add_option("--rho", replay_args.rho,
                     "prior-widening strength (>= 1)");
  replay->add_option("--exploration-epochs", replay_args.exploration_epochs,
                     "override the burn-in epoch count");
  replay->add_option("--cov-exploration-epochs",
                     replay_args.cov_exploration_epochs,
                     "override the covariance-phase epoch count");
  replay->add_option("--forced-rounds", replay_args.forced_rounds,
                     "override the forced-price round count (even)");
  replay->add_option("--out", replay_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return MP_ERR_CONFIG;
  }

  if (run->parsed()) return cmd_run(run_args, run_out);
  if (constants->parsed()) return cmd_constants(const_args);
  if (ingest->parsed()) return cmd_ingest(ingest_csv, ingest_schema,
                                          ingest_out);
  if (replay->parsed()) return cmd_replay(replay_args, replay_out);
  return MP_ERR_CONFIG;
}
