#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "probe/evalkit.hpp"
#include "probe/heavier.hpp"
#include "probe/net.hpp"
#include "probe/oracle.hpp"
#include "probe/towers.hpp"
#include "probe/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace probe;

namespace {

constexpr const char* kVersion = "probe v1.0.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& prefix) {
  if (!obj.is_object()) {
    throw ConfigError("config block is not an object: " + prefix);
  }
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown config key: " + prefix + "." + key);
    }
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback,
         const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value type for config key: " + prefix + "." + key);
  }
}

// Resolved run configuration: every omitted key filled with its default.
struct RunConfig {
  std::string env_name = "heavier";
  heavier::HeavierConfig heavier_cfg;
  towers::TowersConfig towers_cfg;
  net::NetConfig net_cfg;
  train::TrainConfig train_cfg;

  long eval_budget = 10000;
  bool eval_randomized = false;
  std::string oracle_policy = "scan";
  double oracle_delta = 0.1;
  std::vector<double> sweep_dts = {0.01, 0.025, 0.05, 0.075, 0.1};
  int sweep_episodes = 50;
  std::vector<double> gapdist_betas = {3.0, 5.0, 10.0};
  int gapdist_samples = 100000;

  std::uint64_t seed = 0;
};

RunConfig parse_config(const json& root) {
  check_keys(root, {"env", "net", "train", "eval", "sweep", "gapdist", "seed"},
             "");
  RunConfig cfg;
  cfg.seed = get_or<std::uint64_t>(root, "seed", 0, "");

  json env = root.value("env", json::object());
  cfg.env_name = get_or<std::string>(env, "name", "heavier", "env");
  if (cfg.env_name == "heavier") {
    check_keys(env,
               {"name", "beta", "force_newtons", "poke_noise_sigma",
                "timeout_steps", "control_repeat", "physics_dt"},
               "env");
    auto& h = cfg.heavier_cfg;
    h.beta = get_or(env, "beta", h.beta, "env");
    h.force_newtons = get_or(env, "force_newtons", h.force_newtons, "env");
    h.poke_noise_sigma = get_or(env, "poke_noise_sigma", h.poke_noise_sigma, "env");
    h.timeout_steps = get_or(env, "timeout_steps", h.timeout_steps, "env");
    h.control_repeat = get_or(env, "control_repeat", h.control_repeat, "env");
    h.physics_dt = get_or(env, "physics_dt", h.physics_dt, "env");
    if (h.beta <= 0.0) throw ConfigError("env.beta must be positive");
  } else if (cfg.env_name == "towers") {
    check_keys(env,
               {"name", "actuator", "control_dt", "physics_dt", "timeout_steps",
                "force_newtons", "fist_speed"},
               "env");
    auto& t = cfg.towers_cfg;
    std::string actuator = get_or<std::string>(env, "actuator", "direct", "env");
    if (actuator == "direct") {
      t.actuator = towers::Actuator::Direct;
    } else if (actuator == "fist") {
      t.actuator = towers::Actuator::Fist;
    } else {
      throw ConfigError("env.actuator must be \"direct\" or \"fist\"");
    }
    t.control_dt = get_or(env, "control_dt", t.control_dt, "env");
    t.physics_dt = get_or(env, "physics_dt", t.physics_dt, "env");
    t.timeout_steps = get_or(env, "timeout_steps", t.timeout_steps, "env");
    t.force_newtons = get_or(env, "force_newtons", t.force_newtons, "env");
    t.fist_speed = get_or(env, "fist_speed", t.fist_speed, "env");
  } else {
    throw ConfigError("env.name must be \"heavier\" or \"towers\"");
  }

  json net = root.value("net", json::object());
  check_keys(net, {"d_embed", "hidden", "identity_embed", "obs_scale"}, "net");
  cfg.net_cfg.d_embed = get_or(net, "d_embed", cfg.net_cfg.d_embed, "net");
  cfg.net_cfg.hidden = get_or(net, "hidden", cfg.net_cfg.hidden, "net");
  cfg.net_cfg.identity_embed =
      get_or(net, "identity_embed", cfg.net_cfg.identity_embed, "net");
  cfg.net_cfg.obs_scale = get_or(net, "obs_scale", cfg.net_cfg.obs_scale, "net");

  json tr = root.value("train", json::object());
  check_keys(tr,
             {"gamma", "n_envs", "lr", "rmsprop_decay", "rmsprop_eps",
              "entropy_coef", "value_coef", "grad_clip_norm", "total_episodes",
              "ema_smoothing", "stop_at_ema", "min_episodes"},
             "train");
  auto& t = cfg.train_cfg;
  t.gamma = get_or(tr, "gamma", t.gamma, "train");
  t.n_envs = get_or(tr, "n_envs", t.n_envs, "train");
  t.lr = get_or(tr, "lr", t.lr, "train");
  t.rmsprop_decay = get_or(tr, "rmsprop_decay", t.rmsprop_decay, "train");
  t.rmsprop_eps = get_or(tr, "rmsprop_eps", t.rmsprop_eps, "train");
  t.entropy_coef = get_or(tr, "entropy_coef", t.entropy_coef, "train");
  t.value_coef = get_or(tr, "value_coef", t.value_coef, "train");
  t.grad_clip_norm = get_or(tr, "grad_clip_norm", t.grad_clip_norm, "train");
  t.total_episodes = get_or(tr, "total_episodes", t.total_episodes, "train");
  t.ema_smoothing = get_or(tr, "ema_smoothing", t.ema_smoothing, "train");
  t.stop_at_ema = get_or(tr, "stop_at_ema", t.stop_at_ema, "train");
  t.min_episodes = get_or(tr, "min_episodes", t.min_episodes, "train");
  if (!(t.gamma > 0.0 && t.gamma < 1.0)) {
    throw ConfigError("train.gamma must lie in (0, 1)");
  }

  json ev = root.value("eval", json::object());
  check_keys(ev, {"step_budget", "randomized", "policy", "delta"}, "eval");
  cfg.eval_budget = get_or<long>(ev, "step_budget", cfg.eval_budget, "eval");
  cfg.eval_randomized = get_or(ev, "randomized", cfg.eval_randomized, "eval");
  cfg.oracle_policy = get_or(ev, "policy", cfg.oracle_policy, "eval");
  cfg.oracle_delta = get_or(ev, "delta", cfg.oracle_delta, "eval");

  json sw = root.value("sweep", json::object());
  check_keys(sw, {"dts", "episodes_per_dt"}, "sweep");
  cfg.sweep_dts = get_or(sw, "dts", cfg.sweep_dts, "sweep");
  cfg.sweep_episodes = get_or(sw, "episodes_per_dt", cfg.sweep_episodes, "sweep");

  json gd = root.value("gapdist", json::object());
  check_keys(gd, {"betas", "n"}, "gapdist");
  cfg.gapdist_betas = get_or(gd, "betas", cfg.gapdist_betas, "gapdist");
  cfg.gapdist_samples = get_or(gd, "n", cfg.gapdist_samples, "gapdist");
  return cfg;
}

json resolved_json(const RunConfig& cfg) {
  json env;
  if (cfg.env_name == "heavier") {
    const auto& h = cfg.heavier_cfg;
    env = {{"name", "heavier"},
           {"beta", h.beta},
           {"force_newtons", h.force_newtons},
           {"poke_noise_sigma", h.poke_noise_sigma},
           {"timeout_steps", h.timeout_steps},
           {"control_repeat", h.control_repeat},
           {"physics_dt", h.physics_dt}};
  } else {
    const auto& t = cfg.towers_cfg;
    env = {{"name", "towers"},
           {"actuator", t.actuator == towers::Actuator::Direct ? "direct" : "fist"},
           {"control_dt", t.control_dt},
           {"physics_dt", t.physics_dt},
           {"timeout_steps", t.timeout_steps},
           {"force_newtons", t.force_newtons},
           {"fist_speed", t.fist_speed}};
  }
  const auto& t = cfg.train_cfg;
  return {{"env", env},
          {"net",
           {{"d_embed", cfg.net_cfg.d_embed},
            {"hidden", cfg.net_cfg.hidden},
            {"identity_embed", cfg.net_cfg.identity_embed},
            {"obs_scale", cfg.net_cfg.obs_scale}}},
          {"train",
           {{"gamma", t.gamma},
            {"n_envs", t.n_envs},
            {"lr", t.lr},
            {"rmsprop_decay", t.rmsprop_decay},
            {"rmsprop_eps", t.rmsprop_eps},
            {"entropy_coef", t.entropy_coef},
            {"value_coef", t.value_coef},
            {"grad_clip_norm", t.grad_clip_norm},
            {"total_episodes", t.total_episodes},
            {"ema_smoothing", t.ema_smoothing},
            {"stop_at_ema", t.stop_at_ema},
            {"min_episodes", t.min_episodes}}},
          {"eval",
           {{"step_budget", cfg.eval_budget},
            {"randomized", cfg.eval_randomized},
            {"policy", cfg.oracle_policy},
            {"delta", cfg.oracle_delta}}},
          {"sweep",
           {{"dts", cfg.sweep_dts}, {"episodes_per_dt", cfg.sweep_episodes}}},
          {"gapdist",
           {{"betas", cfg.gapdist_betas}, {"n", cfg.gapdist_samples}}},
          {"seed", cfg.seed},
          {"version", kVersion}};
}

std::unique_ptr<env::Environment> make_env(const RunConfig& cfg) {
  if (cfg.env_name == "heavier") {
    return std::make_unique<heavier::HeavierEnv>(cfg.heavier_cfg);
  }
  return std::make_unique<towers::TowersEnv>(cfg.towers_cfg);
}

// Write-then-rename so readers never observe a half-written artifact.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }
  fs::rename(tmp, path);
}

void write_run_metadata(const fs::path& dir, const RunConfig& cfg) {
  fs::create_directories(dir);
  write_atomic(dir / "config.json", resolved_json(cfg).dump(2) + "\n");
  write_atomic(dir / "version.txt", std::string(kVersion) + "\n");
}

RunConfig load_run_config(const std::string& config_path, long seed_flag,
                          int threads) {
  json root = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path);
    try {
      in >> root;
    } catch (const json::exception& e) {
      throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
  }
  RunConfig cfg = parse_config(root);
  if (seed_flag >= 0) cfg.seed = static_cast<std::uint64_t>(seed_flag);
  cfg.train_cfg.seed = cfg.seed;
  cfg.train_cfg.threads = threads;
  return cfg;
}

net::NetConfig net_config_for(const RunConfig& cfg, const env::Environment& e) {
  net::NetConfig n = cfg.net_cfg;
  n.obs_dim = e.obs_dim();
  n.n_actions = e.n_actions();
  return n;
}

// Evaluation artifacts shared by `eval` and `oracle`.
void write_eval_outputs(const fs::path& dir, const RunConfig& cfg,
                        const std::vector<env::EpisodeRecord>& records,
                        const std::string& condition) {
  evalkit::EvalSummary summary = evalkit::summarize(records, condition);
  write_atomic(dir / "records.ndjson", evalkit::records_to_ndjson(records));
  write_atomic(dir / "summary.csv", evalkit::summary_csv({summary}));

  evalkit::Histogram hist =
      evalkit::Histogram::from_values(evalkit::interaction_counts(records));
  write_atomic(dir / "fig3_left.csv", evalkit::histogram_csv({{condition, hist}}));

  if (cfg.env_name == "heavier") {
    std::vector<std::pair<double, double>> pts = evalkit::gap_length_points(records);
    if (pts.size() >= 2) {
      evalkit::OlsFit fit = evalkit::ols_fit(pts);
      write_atomic(dir / "fig3_right.csv", evalkit::gap_length_csv(records, fit));
      write_atomic(dir / "fig3_right_bins.csv", evalkit::gap_bin_stats_csv(records));
    }
  }
}

int cmd_train(const RunConfig& cfg, const fs::path& out) {
  write_run_metadata(out, cfg);
  std::unique_ptr<env::Environment> probe_env = make_env(cfg);
  net::NetConfig ncfg = net_config_for(cfg, *probe_env);
  train::TrainResult result = train::train(
      [&cfg] { return make_env(cfg); }, ncfg, cfg.train_cfg);
  net::save_checkpoint((out / "checkpoint.bin").string(), result.params);
  write_atomic(out / "curve.csv", train::curve_to_csv(result.curve));
  json status = {{"episodes", result.episodes},
                 {"final_ema", result.final_ema},
                 {"aborted", result.aborted}};
  write_atomic(out / "train_status.json", status.dump(2) + "\n");
  std::printf("%s\n", status.dump().c_str());
  return result.aborted ? 2 : 0;
}

int cmd_eval(const RunConfig& cfg, const fs::path& out,
             const std::string& checkpoint) {
  write_run_metadata(out, cfg);
  std::unique_ptr<env::Environment> e = make_env(cfg);
  net::AgentParams params = net::load_checkpoint(checkpoint);
  net::AgentPolicy agent(params, e->n_interact(), mix_seed(cfg.seed, 0xA6));
  std::vector<env::EpisodeRecord> records;
  std::string condition = cfg.env_name;
  if (cfg.eval_randomized) {
    env::RandomizedPolicy wrapped(agent, e->n_interact(), mix_seed(cfg.seed, 0xFA));
    records = evalkit::eval_run(*e, wrapped, cfg.eval_budget, cfg.seed);
    for (env::EpisodeRecord& r : records) r.randomized = true;
    condition += "-randomized";
  } else {
    records = evalkit::eval_run(*e, agent, cfg.eval_budget, cfg.seed);
  }
  write_eval_outputs(out, cfg, records, condition);
  std::printf("%s\n",
              json({{"episodes", records.size()}}).dump().c_str());
  return 0;
}

int cmd_oracle(const RunConfig& cfg, const fs::path& out) {
  if (cfg.env_name != "heavier") {
    throw ConfigError("oracle policies are defined for env.name = heavier");
  }
  write_run_metadata(out, cfg);
  heavier::HeavierEnv e(cfg.heavier_cfg);
  std::unique_ptr<env::Policy> policy;
  if (cfg.oracle_policy == "scan") {
    policy = std::make_unique<oracle::ScanPolicy>(cfg.heavier_cfg);
  } else if (cfg.oracle_policy == "successive_elimination") {
    policy = std::make_unique<oracle::SuccessiveEliminationPolicy>(
        cfg.oracle_delta, cfg.heavier_cfg);
  } else {
    throw ConfigError(
        "eval.policy must be \"scan\" or \"successive_elimination\"");
  }
  std::vector<env::EpisodeRecord> records;
  std::string condition = cfg.oracle_policy;
  if (cfg.eval_randomized) {
    env::RandomizedPolicy wrapped(*policy, e.n_interact(), mix_seed(cfg.seed, 0xFA));
    records = evalkit::eval_run(e, wrapped, cfg.eval_budget, cfg.seed);
    for (env::EpisodeRecord& r : records) r.randomized = true;
    condition += "-randomized";
  } else {
    records = evalkit::eval_run(e, *policy, cfg.eval_budget, cfg.seed);
  }
  write_eval_outputs(out, cfg, records, condition);
  std::printf("%s\n", json({{"episodes", records.size()}}).dump().c_str());
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const fs::path& out,
              const std::string& checkpoint) {
  if (cfg.env_name != "towers" ||
      cfg.towers_cfg.actuator != towers::Actuator::Fist) {
    throw ConfigError("sweep requires env.name = towers with the fist actuator");
  }
  write_run_metadata(out, cfg);
  net::AgentParams params = net::load_checkpoint(checkpoint);
  std::vector<evalkit::SweepRow> rows = evalkit::control_dt_sweep(
      params, cfg.towers_cfg, cfg.sweep_dts, cfg.sweep_episodes, cfg.seed);
  write_atomic(out / "fig5.csv", evalkit::sweep_csv(rows));
  std::printf("%s\n", json({{"rows", rows.size()}}).dump().c_str());
  return 0;
}

int cmd_gapdist(const RunConfig& cfg, const fs::path& out) {
  write_run_metadata(out, cfg);
  std::vector<oracle::GapDistribution> dists;
  Rng rng(cfg.seed);
  for (double beta : cfg.gapdist_betas) {
    dists.push_back(oracle::gap_cdf(beta, cfg.gapdist_samples, rng));
  }
  write_atomic(out / "fig1_right.csv", oracle::gap_distributions_csv(dists));
  std::printf("%s\n", json({{"betas", cfg.gapdist_betas}}).dump().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interactive-experimentation environments, agent and analyses"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "run";
  std::string checkpoint;
  long seed_flag = -1;
  int threads = 1;
  bool randomized = false;

  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed_flag, "overrides the config seed");
  app.add_option("--threads", threads, "rollout threads (1 = reference mode)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--checkpoint", checkpoint, "trained parameter file");
  app.add_flag("--randomized", randomized, "randomize interaction actions");

  CLI::App* train_cmd = app.add_subcommand("train", "train an agent");
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "run a scripted baseline");
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "control time-step sweep of a fist agent");
  CLI::App* gapdist_cmd =
      app.add_subcommand("gapdist", "export mass-gap distributions");

  for (CLI::App* sub : {train_cmd, eval_cmd, oracle_cmd, sweep_cmd, gapdist_cmd}) {
    sub->fallthrough();  // shared flags may follow the subcommand name
  }

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_run_config(config_path, seed_flag, threads);
    if (randomized) cfg.eval_randomized = true;
    fs::path out(out_dir);
    if (train_cmd->parsed()) return cmd_train(cfg, out);
    if (eval_cmd->parsed()) {
      if (checkpoint.empty()) throw ConfigError("eval needs --checkpoint");
      return cmd_eval(cfg, out, checkpoint);
    }
    if (oracle_cmd->parsed()) return cmd_oracle(cfg, out);
    if (sweep_cmd->parsed()) {
      if (checkpoint.empty()) throw ConfigError("sweep needs --checkpoint");
      return cmd_sweep(cfg, out, checkpoint);
    }
    if (gapdist_cmd->parsed()) return cmd_gapdist(cfg, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", json({{"error", e.what()}}).dump().c_str());
    return 1;
  }
  return 0;
}
