#include "probe/towers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace probe::towers {

using phys::Vec3;

TowerPartition sample_partition(Rng& rng) {
  TowerPartition p;
  p.k = 1 + rng.uniform_int(5);
  // Uniform (k-1)-subset of cut positions {1,2,3,4} via partial Fisher-Yates.
  std::array<int, 4> cuts = {1, 2, 3, 4};
  for (int i = 0; i < p.k - 1; ++i) {
    int j = i + rng.uniform_int(4 - i);
    std::swap(cuts[i], cuts[j]);
  }
  std::vector<int> chosen(cuts.begin(), cuts.begin() + (p.k - 1));
  std::sort(chosen.begin(), chosen.end());
  chosen.push_back(5);
  int start = 0;
  for (int cut : chosen) {
    p.segments.emplace_back(start, cut - start);
    start = cut;
  }
  return p;
}

int cluster_count(const std::vector<Vec3>& positions, double threshold) {
  std::vector<int> parent(positions.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      if ((positions[i] - positions[j]).norm() <= threshold) {
        parent[find(static_cast<int>(i))] = find(static_cast<int>(j));
      }
    }
  }
  int count = 0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (find(static_cast<int>(i)) == static_cast<int>(i)) ++count;
  }
  return count;
}

phys::Vec3 fist_start_pose() { return {-2.0, 0.25, 0.6}; }

TowersEnv::TowersEnv(const TowersConfig& cfg) : cfg_(cfg) {
  ep_cfg_.timeout_steps = cfg.timeout_steps;
  int repeat = std::max(
      1, static_cast<int>(std::lround(cfg.control_dt / cfg.physics_dt)));
  ep_cfg_.control_repeat = repeat;
  substep_dt_ = cfg.control_dt / repeat;
}

env::Observation TowersEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  return reset_with(sample_partition(rng_));
}

env::Observation TowersEnv::reset_with(const TowerPartition& p) {
  partition_ = p;
  world_ = phys::TowerWorld{};
  world_.physics_dt = substep_dt_;
  for (const auto& [first, len] : p.segments) {
    phys::Body3D body;
    body.mass = static_cast<double>(len);
    double com_z = 0.0;
    for (int b = first; b < first + len; ++b) com_z += 0.5 + b;
    com_z /= len;
    body.position = {0.0, 0.0, com_z};
    for (int b = first; b < first + len; ++b) {
      body.member_blocks.push_back(b);
      body.local_offsets.push_back({0.0, 0.0, 0.5 + b - com_z});
    }
    world_.bodies.push_back(std::move(body));
  }
  if (cfg_.actuator == Actuator::Fist) {
    phys::Fist fist;
    fist.position = fist_start_pose();
    world_.fist = fist;
  }
  steps_ = 0;
  done_ = false;
  return observe();
}

env::Observation TowersEnv::observe() const {
  env::Observation obs;
  obs.reserve(obs_dim());
  for (const Vec3& p : world_.block_positions()) {
    obs.push_back(p.x);
    obs.push_back(p.y);
    obs.push_back(p.z);
  }
  if (cfg_.actuator == Actuator::Fist) {
    obs.push_back(world_.fist->position.x);
    obs.push_back(world_.fist->position.y);
  }
  return obs;
}

namespace {

Vec3 direction_vec(int dir) {
  switch (dir) {
    case 0: return {1.0, 0.0, 0.0};
    case 1: return {-1.0, 0.0, 0.0};
    case 2: return {0.0, 1.0, 0.0};
    case 3: return {0.0, -1.0, 0.0};
  }
  throw std::invalid_argument("direction out of range");
}

}  // namespace

env::StepResult TowersEnv::step(const env::Action& action) {
  if (done_) throw std::logic_error("step on finished episode");
  env::StepResult r;
  ++steps_;
  if (action.kind == env::Action::Kind::Label) {
    if (action.index < 0 || action.index >= 5) {
      throw std::invalid_argument("label index out of range");
    }
    r.done = true;
    r.termination = env::Termination::Labeled;
    r.reward = action.index == correct_answer() ? ep_cfg_.reward_correct
                                                : ep_cfg_.reward_incorrect;
  } else {
    std::vector<Vec3> forces(world_.bodies.size());
    if (cfg_.actuator == Actuator::Direct) {
      if (action.index < 0 || action.index >= 20) {
        throw std::invalid_argument("interact index out of range");
      }
      int block = action.index / 4;
      Vec3 dir = direction_vec(action.index % 4);
      forces[static_cast<std::size_t>(world_.body_of_block(block))] =
          dir * cfg_.force_newtons;
    } else {
      if (action.index < 0 || action.index >= 4) {
        throw std::invalid_argument("interact index out of range");
      }
      world_.set_fist_velocity(direction_vec(action.index) * cfg_.fist_speed);
    }
    for (int s = 0; s < ep_cfg_.control_repeat; ++s) {
      world_.step(forces, substep_dt_);
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

int sweep_cluster_estimate(const TowersEnv& env) {
  phys::TowerWorld w = env.world();
  if (!w.fist.has_value()) {
    throw std::logic_error("sweep probe needs the fist actuator");
  }
  int repeat = env.config().control_repeat;
  double dt = env.physics_dt();
  std::vector<Vec3> none(w.bodies.size());
  w.set_fist_velocity({env.towers_config().fist_speed, 0.0, 0.0});
  for (int s = 0; s < 10 * repeat; ++s) w.step(none, dt);
  w.set_fist_velocity({0.0, 0.0, 0.0});
  for (int s = 0; s < 16 * repeat; ++s) w.step(none, dt);
  return cluster_count(w.block_positions(), 1.05 * phys::kBlockEdge);
}

nlohmann::json TowersEnv::instance_json() const {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& [first, len] : partition_.segments) {
    segs.push_back({first, len});
  }
  return {{"k", partition_.k}, {"segments", segs}};
}

}  // namespace probe::towers
