#include "probe/heavier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace probe::heavier {

MassAssignment sample_masses(double beta, Rng& rng) {
  if (beta < 1.0) throw std::invalid_argument("beta must be >= 1");
  MassAssignment m;
  m.beta = beta;
  m.heavy_index = rng.uniform_int(4);
  for (int i = 0; i < 4; ++i) {
    double u01 = rng.uniform();
    // Beta(beta, 1) inverse CDF is U^(1/beta); Beta(1, beta) mirrors it.
    m.u[i] = i == m.heavy_index ? std::pow(u01, 1.0 / beta)
                                : 1.0 - std::pow(u01, 1.0 / beta);
    m.masses[i] = 0.5 + 1.5 * m.u[i];
  }
  std::array<double, 4> sorted = m.u;
  std::sort(sorted.begin(), sorted.end());
  m.mass_gap = sorted[3] - sorted[2];
  return m;
}

int answer_of(const MassAssignment& m) {
  int best = 0;
  for (int i = 1; i < 4; ++i) {
    if (m.masses[i] > m.masses[best]) best = i;
  }
  return best;
}

HeavierEnv::HeavierEnv(const HeavierConfig& cfg) : cfg_(cfg) {
  ep_cfg_.timeout_steps = cfg.timeout_steps;
  ep_cfg_.control_repeat = cfg.control_repeat;
}

env::Observation HeavierEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  masses_ = sample_masses(cfg_.beta, rng_);
  return start_episode();
}

env::Observation HeavierEnv::reset_with(const MassAssignment& m,
                                        std::uint64_t noise_seed) {
  masses_ = m;
  rng_ = Rng(noise_seed);
  return start_episode();
}

env::Observation HeavierEnv::start_episode() {
  world_ = phys::VerticalWorld{};
  for (int i = 0; i < 4; ++i) world_.blocks[i].mass = masses_.masses[i];
  steps_ = 0;
  done_ = false;
  return observe();
}

env::Observation HeavierEnv::observe() const {
  env::Observation obs(4);
  for (int i = 0; i < 4; ++i) obs[i] = world_.blocks[i].z;
  return obs;
}

env::StepResult HeavierEnv::step(const env::Action& action) {
  if (done_) throw std::logic_error("step on finished episode");
  env::StepResult r;
  ++steps_;
  if (action.kind == env::Action::Kind::Label) {
    r.done = true;
    r.termination = env::Termination::Labeled;
    r.reward = action.index == correct_answer() ? ep_cfg_.reward_correct
                                                : ep_cfg_.reward_incorrect;
  } else {
    if (action.index < 0 || action.index >= 4) {
      throw std::invalid_argument("poke index out of range");
    }
    double eps = 1.0;
    if (cfg_.poke_noise_sigma > 0.0) {
      eps = std::clamp(rng_.normal(1.0, cfg_.poke_noise_sigma), 0.8, 1.2);
    }
    std::array<double, 4> forces{};
    forces[action.index] = cfg_.force_newtons * eps;
    for (int s = 0; s < ep_cfg_.control_repeat; ++s) {
      world_.step(forces, cfg_.physics_dt);
    }
    if (steps_ >= ep_cfg_.timeout_steps) {
      r.done = true;
      r.termination = env::Termination::Timeout;
      r.reward = ep_cfg_.reward_timeout;
    }
  }
  done_ = r.done;
  r.obs = observe();
  return r;
}

nlohmann::json HeavierEnv::instance_json() const {
  nlohmann::json j;
  j["masses"] = masses_.masses;
  j["u"] = masses_.u;
  j["heavy_index"] = masses_.heavy_index;
  j["beta"] = masses_.beta;
  j["mass_gap"] = masses_.mass_gap;
  return j;
}

}  // namespace probe::heavier
