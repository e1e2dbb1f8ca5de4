#pragma once

#include <array>

#include "probe/env.hpp"
#include "probe/physics.hpp"

namespace probe::heavier {

struct HeavierConfig {
  double beta = 10.0;
  double force_newtons = 20.0;
  double poke_noise_sigma = 0.05;  // relative, clipped to [0.8, 1.2]
  int timeout_steps = 100;
  int control_repeat = 4;
  double physics_dt = phys::kDefaultDt;
};

struct MassAssignment {
  std::array<double, 4> masses;  // kg, 0.5 + 1.5 * u
  std::array<double, 4> u;       // raw Beta draws in [0, 1]
  int heavy_index = 0;           // the block sampled as "heavy"
  double beta = 0.0;
  double mass_gap = 0.0;         // gap of the two largest u draws
};

// One block uniformly chosen heavy ~ Beta(beta, 1), the rest ~ Beta(1, beta),
// both via inverse CDF.
MassAssignment sample_masses(double beta, Rng& rng);

// Ground truth is the argmax of realized masses (lowest index on ties).
int answer_of(const MassAssignment& m);

class HeavierEnv : public env::Environment {
 public:
  explicit HeavierEnv(const HeavierConfig& cfg = {});

  env::Observation reset(std::uint64_t seed) override;
  env::StepResult step(const env::Action& action) override;

  int n_interact() const override { return 4; }
  int n_labels() const override { return 4; }
  int obs_dim() const override { return 4; }
  int correct_answer() const override { return answer_of(masses_); }
  std::string name() const override { return "heavier"; }
  nlohmann::json instance_json() const override;
  const env::EpisodeConfig& config() const override { return ep_cfg_; }
  double physics_dt() const override { return cfg_.physics_dt; }

  const MassAssignment& masses() const { return masses_; }
  const phys::VerticalWorld& world() const { return world_; }

  // Test hook: start an episode from a fixed instance.
  env::Observation reset_with(const MassAssignment& m, std::uint64_t noise_seed);

 private:
  env::Observation start_episode();
  env::Observation observe() const;

  HeavierConfig cfg_;
  env::EpisodeConfig ep_cfg_;
  Rng rng_{0};
  MassAssignment masses_{};
  phys::VerticalWorld world_;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace probe::heavier
