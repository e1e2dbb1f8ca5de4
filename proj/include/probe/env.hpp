#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "probe/rng.hpp"

namespace probe::env {

using Observation = std::vector<double>;

// Every step the agent emits either an interaction or a labeling action.
struct Action {
  enum class Kind { Interact, Label };
  Kind kind = Kind::Interact;
  int index = 0;

  static Action interact(int i) { return {Kind::Interact, i}; }
  static Action label(int j) { return {Kind::Label, j}; }
  bool operator==(const Action&) const = default;
};

enum class Termination { None, Labeled, Timeout };

const char* termination_name(Termination t);

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  Termination termination = Termination::None;
};

struct EpisodeConfig {
  int timeout_steps = 100;
  double reward_correct = 1.0;
  double reward_incorrect = -1.0;
  double reward_timeout = -1.0;
  int control_repeat = 4;  // physics substeps per agent action
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual Observation reset(std::uint64_t seed) = 0;
  virtual StepResult step(const Action& action) = 0;

  virtual int n_interact() const = 0;
  virtual int n_labels() const = 0;
  virtual int obs_dim() const = 0;
  virtual int correct_answer() const = 0;  // ground-truth label index
  virtual std::string name() const = 0;
  virtual nlohmann::json instance_json() const = 0;
  virtual const EpisodeConfig& config() const = 0;
  virtual double physics_dt() const = 0;

  int n_actions() const { return n_interact() + n_labels(); }
};

struct PolicyDecision {
  Action action;
  std::vector<double> logits;  // empty for scripted policies
  double value = 0.0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode() {}
  virtual PolicyDecision act(const Observation& obs) = 0;
};

// Replaces each candidate interaction with a uniformly random one; labels
// pass through unchanged, so the wrapped policy still decides when to stop
// and what to answer.
class RandomizedPolicy : public Policy {
 public:
  RandomizedPolicy(Policy& inner, int n_interact, std::uint64_t seed)
      : inner_(inner), n_interact_(n_interact), rng_(seed) {}

  void begin_episode() override { inner_.begin_episode(); }
  PolicyDecision act(const Observation& obs) override;

 private:
  Policy& inner_;
  int n_interact_;
  Rng rng_;
};

struct TrajectoryStep {
  Observation obs;
  Action action;
  int flat_index = 0;  // index of the action within the policy logits
  double reward = 0.0;
  std::vector<double> logits;
  double value = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
};

struct EpisodeRecord {
  std::uint64_t seed = 0;
  std::string env_name;
  nlohmann::json instance;
  std::vector<int> actions;  // interact i -> i, label j -> n_interact + j
  int label = -1;            // -1 on timeout
  bool correct = false;
  int steps = 0;
  double sim_seconds = 0.0;
  Termination termination = Termination::None;
  bool randomized = false;
};

std::pair<EpisodeRecord, Trajectory> run_episode(Environment& env,
                                                 Policy& policy,
                                                 std::uint64_t seed);

// One NDJSON object per record, fixed field names.
std::string record_to_ndjson(const EpisodeRecord& rec);
EpisodeRecord record_from_ndjson(const std::string& line);

}  // namespace probe::env
