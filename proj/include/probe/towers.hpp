#pragma once

#include <vector>

#include "probe/env.hpp"
#include "probe/physics.hpp"

namespace probe::towers {

enum class Actuator { Direct, Fist };

struct TowersConfig {
  Actuator actuator = Actuator::Direct;
  double control_dt = 0.1;
  double physics_dt = phys::kDefaultDt;
  int timeout_steps = 26;
  double force_newtons = 30.0;  // direct actuation, horizontal
  double fist_speed = 2.0;      // m/s
};

struct TowerPartition {
  int k = 1;
  // Contiguous segments as (first block, length), covering blocks 0..4.
  std::vector<std::pair<int, int>> segments;
};

// k ~ Uniform{1..5}, then a uniform contiguous composition of 5 into k parts.
TowerPartition sample_partition(Rng& rng);

// Single-linkage cluster count of primitive block centers.
int cluster_count(const std::vector<phys::Vec3>& positions, double threshold);

class TowersEnv : public env::Environment {
 public:
  explicit TowersEnv(const TowersConfig& cfg = {});

  env::Observation reset(std::uint64_t seed) override;
  env::StepResult step(const env::Action& action) override;

  int n_interact() const override {
    return cfg_.actuator == Actuator::Direct ? 20 : 4;
  }
  int n_labels() const override { return 5; }
  int obs_dim() const override {
    return cfg_.actuator == Actuator::Fist ? 17 : 15;
  }
  // Label j means "j+1 rigid bodies".
  int correct_answer() const override { return partition_.k - 1; }
  std::string name() const override {
    return cfg_.actuator == Actuator::Direct ? "towers-direct" : "towers-fist";
  }
  nlohmann::json instance_json() const override;
  const env::EpisodeConfig& config() const override { return ep_cfg_; }
  double physics_dt() const override { return substep_dt_; }

  const TowersConfig& towers_config() const { return cfg_; }
  const TowerPartition& partition() const { return partition_; }
  const phys::TowerWorld& world() const { return world_; }

  // Test hook: start an episode from a fixed partition.
  env::Observation reset_with(const TowerPartition& p);

 private:
  env::Observation observe() const;

  TowersConfig cfg_;
  env::EpisodeConfig ep_cfg_;
  double substep_dt_ = phys::kDefaultDt;
  Rng rng_{0};
  TowerPartition partition_;
  phys::TowerWorld world_;
  int steps_ = 0;
  bool done_ = true;
};

// Fist start pose; offset from the tower so a +x drive passes through it.
phys::Vec3 fist_start_pose();

// Solvability probe: drive the fist +x for 10 control steps, hold it still
// for another 16 while the debris settles, then cluster the block centers
// at threshold 1.05 * block edge. Requires the fist actuator.
int sweep_cluster_estimate(const TowersEnv& env);

}  // namespace probe::towers
