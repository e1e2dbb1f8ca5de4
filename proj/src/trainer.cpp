#include "probe/trainer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace probe::train {

std::vector<double> compute_returns(const std::vector<double>& rewards,
                                    double gamma) {
  std::vector<double> returns(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    returns[i] = acc;
  }
  return returns;
}

A2cLoss a2c_loss(const env::Trajectory& traj, const std::vector<double>& returns,
                 const TrainConfig& cfg) {
  if (traj.steps.size() != returns.size()) {
    throw std::invalid_argument("returns / trajectory length mismatch");
  }
  A2cLoss out;
  out.advantages.resize(returns.size());
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const env::TrajectoryStep& s = traj.steps[t];
    double adv = returns[t] - s.value;
    out.advantages[t] = adv;
    out.loss += -adv * net::log_prob_of(s.logits, s.flat_index) +
                cfg.value_coef * adv * adv -
                cfg.entropy_coef * net::entropy_of_logits(s.logits);
  }
  return out;
}

void clip_global_norm(Eigen::VectorXd& g, double max_norm) {
  double norm = g.norm();
  if (norm > max_norm) g *= max_norm / norm;
}

namespace {

struct EpisodeGrad {
  net::AgentParams grads;
  double loss = 0.0;
  int steps = 0;
  bool correct = false;
};

EpisodeGrad episode_gradient(const net::AgentParams& params,
                             env::Environment& environment,
                             net::AgentPolicy& policy, std::uint64_t ep_seed,
                             const TrainConfig& cfg) {
  auto [rec, traj] = env::run_episode(environment, policy, ep_seed);
  const int T = static_cast<int>(traj.steps.size());
  const int A = params.cfg().n_actions;

  std::vector<env::Observation> obs_seq(T);
  std::vector<double> rewards(T);
  for (int t = 0; t < T; ++t) {
    obs_seq[t] = traj.steps[t].obs;
    rewards[t] = traj.steps[t].reward;
  }
  std::vector<double> returns = compute_returns(rewards, cfg.gamma);

  net::ForwardCache cache = net::forward(params, obs_seq);

  Eigen::MatrixXd dlogits(A, T);
  Eigen::VectorXd dvalues(T);
  double loss = 0.0;
  for (int t = 0; t < T; ++t) {
    const env::TrajectoryStep& s = traj.steps[t];
    int a = s.flat_index;
    double v = cache.values(t);
    double adv = returns[t] - v;

    std::vector<double> logits(cache.logits.col(t).data(),
                               cache.logits.col(t).data() + A);
    std::vector<double> p = net::softmax(logits);
    double ent = 0.0;
    for (double q : p) {
      if (q > 0.0) ent -= q * std::log(q);
    }
    loss += -adv * net::log_prob_of(logits, a) +
            cfg.value_coef * adv * adv - cfg.entropy_coef * ent;

    for (int i = 0; i < A; ++i) {
      double dpolicy = adv * (p[static_cast<std::size_t>(i)] - (i == a ? 1.0 : 0.0));
      double dent = cfg.entropy_coef * p[static_cast<std::size_t>(i)] *
                    (std::log(std::max(p[static_cast<std::size_t>(i)], 1e-300)) + ent);
      dlogits(i, t) = dpolicy + dent;
    }
    dvalues(t) = -2.0 * cfg.value_coef * adv;
  }

  EpisodeGrad out{net::backward(params, cache, dlogits, dvalues), loss, T,
                  rec.correct};
  return out;
}

}  // namespace

TrainResult train(const EnvFactory& make_env, const net::NetConfig& net_cfg,
                  const TrainConfig& cfg) {
  Rng init_rng(mix_seed(cfg.seed, 0x1A17));
  net::AgentParams params = net::AgentParams::init(net_cfg, init_rng);
  Eigen::VectorXd ms = Eigen::VectorXd::Zero(params.size());

  std::vector<std::unique_ptr<env::Environment>> envs;
  std::vector<std::unique_ptr<net::AgentPolicy>> policies;
  for (int i = 0; i < cfg.n_envs; ++i) {
    envs.push_back(make_env());
    policies.push_back(std::make_unique<net::AgentPolicy>(
        params, envs.back()->n_interact(),
        mix_seed(cfg.seed, 0xF01D + static_cast<std::uint64_t>(i))));
  }

  TrainResult result;
  result.params = params;
  double ema = 0.0;
  long episodes = 0;
  long update = 0;

  while (episodes < cfg.total_episodes) {
    std::vector<EpisodeGrad> batch(static_cast<std::size_t>(cfg.n_envs));
    auto collect = [&](int i) {
      std::uint64_t ep_seed = mix_seed(
          cfg.seed, 0xE0000000ULL + static_cast<std::uint64_t>(
                                        update * cfg.n_envs + i));
      batch[static_cast<std::size_t>(i)] =
          episode_gradient(params, *envs[static_cast<std::size_t>(i)],
                           *policies[static_cast<std::size_t>(i)], ep_seed, cfg);
    };
    if (cfg.threads > 1) {
      std::vector<std::thread> pool;
      int per = (cfg.n_envs + cfg.threads - 1) / cfg.threads;
      for (int w = 0; w < cfg.threads; ++w) {
        int lo = w * per, hi = std::min(cfg.n_envs, lo + per);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
          for (int i = lo; i < hi; ++i) collect(i);
        });
      }
      for (auto& th : pool) th.join();
    } else {
      for (int i = 0; i < cfg.n_envs; ++i) collect(i);
    }

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
    double batch_loss = 0.0;
    double batch_len = 0.0;
    for (const EpisodeGrad& eg : batch) {
      grad += eg.grads.flat();
      batch_loss += eg.loss;
      batch_len += eg.steps;
      ema = cfg.ema_smoothing * ema + (1.0 - cfg.ema_smoothing) * (eg.correct ? 1.0 : 0.0);
      ++episodes;
    }
    grad /= static_cast<double>(cfg.n_envs);
    batch_loss /= static_cast<double>(cfg.n_envs);
    batch_len /= static_cast<double>(cfg.n_envs);

    if (!grad.allFinite() || !std::isfinite(batch_loss)) {
      result.aborted = true;  // params keep the last good snapshot
      break;
    }

    clip_global_norm(grad, cfg.grad_clip_norm);

    ms = cfg.rmsprop_decay * ms.array() +
         (1.0 - cfg.rmsprop_decay) * grad.array().square();
    params.flat().array() -=
        cfg.lr * grad.array() / (ms.array().sqrt() + cfg.rmsprop_eps);

    result.params = params;
    result.curve.push_back({episodes, ema, batch_len, batch_loss});
    ++update;

    if (cfg.stop_at_ema > 0.0 && episodes >= cfg.min_episodes &&
        ema >= cfg.stop_at_ema) {
      break;
    }
  }

  result.final_ema = ema;
  result.episodes = episodes;
  return result;
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream os;
  os << "episode_index,ema_success,mean_episode_length,loss\n";
  for (const CurvePoint& p : curve) {
    os << p.episode << "," << p.ema_success << "," << p.mean_episode_length
       << "," << p.loss << "\n";
  }
  return os.str();
}

}  // namespace probe::train
