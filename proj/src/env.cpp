#include "probe/env.hpp"

#include <stdexcept>

namespace probe::env {

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::None: return "none";
    case Termination::Labeled: return "labeled";
    case Termination::Timeout: return "timeout";
  }
  return "?";
}

PolicyDecision RandomizedPolicy::act(const Observation& obs) {
  PolicyDecision d = inner_.act(obs);
  if (d.action.kind == Action::Kind::Interact) {
    d.action.index = rng_.uniform_int(n_interact_);
  }
  return d;
}

std::pair<EpisodeRecord, Trajectory> run_episode(Environment& env,
                                                 Policy& policy,
                                                 std::uint64_t seed) {
  EpisodeRecord rec;
  rec.seed = seed;
  rec.env_name = env.name();

  Trajectory traj;
  Observation obs = env.reset(seed);
  policy.begin_episode();
  rec.instance = env.instance_json();

  while (true) {
    PolicyDecision d = policy.act(obs);
    StepResult r = env.step(d.action);

    int flat = d.action.kind == Action::Kind::Interact
                   ? d.action.index
                   : env.n_interact() + d.action.index;

    TrajectoryStep ts;
    ts.obs = obs;
    ts.action = d.action;
    ts.flat_index = flat;
    ts.reward = r.reward;
    ts.logits = std::move(d.logits);
    ts.value = d.value;
    traj.steps.push_back(std::move(ts));
    rec.actions.push_back(flat);
    ++rec.steps;

    if (r.done) {
      rec.termination = r.termination;
      if (r.termination == Termination::Labeled) {
        rec.label = d.action.index;
        rec.correct = d.action.index == env.correct_answer();
      }
      break;
    }
    obs = std::move(r.obs);
  }

  rec.sim_seconds =
      rec.steps * env.config().control_repeat * env.physics_dt();
  return {std::move(rec), std::move(traj)};
}

std::string record_to_ndjson(const EpisodeRecord& rec) {
  nlohmann::json j;
  j["seed"] = rec.seed;
  j["env"] = rec.env_name;
  j["instance"] = rec.instance;
  j["actions"] = rec.actions;
  j["label"] = rec.label;
  j["correct"] = rec.correct;
  j["steps"] = rec.steps;
  j["sim_seconds"] = rec.sim_seconds;
  j["termination"] = termination_name(rec.termination);
  if (rec.randomized) j["randomized"] = true;
  return j.dump();
}

EpisodeRecord record_from_ndjson(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  EpisodeRecord rec;
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.env_name = j.at("env").get<std::string>();
  rec.instance = j.at("instance");
  rec.actions = j.at("actions").get<std::vector<int>>();
  rec.label = j.at("label").get<int>();
  rec.correct = j.at("correct").get<bool>();
  rec.steps = j.at("steps").get<int>();
  rec.sim_seconds = j.at("sim_seconds").get<double>();
  std::string term = j.at("termination").get<std::string>();
  rec.termination = term == "labeled" ? Termination::Labeled
                    : term == "timeout" ? Termination::Timeout
                                        : Termination::None;
  rec.randomized = j.value("randomized", false);
  return rec;
}

}  // namespace probe::env
