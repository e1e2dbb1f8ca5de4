#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "probe/env.hpp"
#include "probe/net.hpp"

namespace probe::train {

struct TrainConfig {
  double gamma = 0.95;
  int n_envs = 16;
  double lr = 7e-4;
  double rmsprop_decay = 0.99;
  double rmsprop_eps = 1e-5;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double grad_clip_norm = 40.0;
  long total_episodes = 60000;
  std::uint64_t seed = 0;
  double ema_smoothing = 0.99;
  double stop_at_ema = 0.0;  // 0 disables early stop
  long min_episodes = 2000;  // before early stop may trigger
  int threads = 1;
};

// Discounted returns; every episode terminates inside the unroll, so no
// bootstrap value is needed.
std::vector<double> compute_returns(const std::vector<double>& rewards,
                                    double gamma);

struct A2cLoss {
  double loss = 0.0;
  std::vector<double> advantages;
};

// loss = -sum A_t log pi(a_t) + value_coef * sum (R_t - V_t)^2
//        - entropy_coef * sum H(pi_t), with V_t constant in the policy term.
A2cLoss a2c_loss(const env::Trajectory& traj, const std::vector<double>& returns,
                 const TrainConfig& cfg);

// Rescales g in place so its global norm never exceeds max_norm.
void clip_global_norm(Eigen::VectorXd& g, double max_norm);

struct CurvePoint {
  long episode = 0;
  double ema_success = 0.0;
  double mean_episode_length = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  net::AgentParams params;
  std::vector<CurvePoint> curve;
  double final_ema = 0.0;
  long episodes = 0;
  bool aborted = false;  // divergence; params hold the last good snapshot
};

using EnvFactory = std::function<std::unique_ptr<env::Environment>()>;

// Synchronous batched advantage actor-critic: each of n_envs collects one
// full episode per update, per-episode gradients are averaged, clipped and
// applied with RMSProp.
TrainResult train(const EnvFactory& make_env, const net::NetConfig& net_cfg,
                  const TrainConfig& cfg);

std::string curve_to_csv(const std::vector<CurvePoint>& curve);

}  // namespace probe::train
