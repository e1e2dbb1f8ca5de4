#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "probe/net.hpp"

using namespace probe;

namespace {

net::NetConfig small_cfg() {
  net::NetConfig cfg;
  cfg.obs_dim = 3;
  cfg.n_actions = 4;
  cfg.d_embed = 5;
  cfg.hidden = 8;
  return cfg;
}

std::vector<env::Observation> random_obs_seq(const net::NetConfig& cfg, int T,
                                             Rng& rng) {
  std::vector<env::Observation> seq(static_cast<std::size_t>(T));
  for (auto& obs : seq) {
    obs.resize(static_cast<std::size_t>(cfg.obs_dim));
    for (double& v : obs) v = rng.uniform(-1.0, 1.0);
  }
  return seq;
}

// Plain scalar-loop LSTM, written independently of the Eigen version, as a
// numerical oracle for the forward pass.
struct PlainOutputs {
  std::vector<std::vector<double>> logits;
  std::vector<double> values;
};

PlainOutputs plain_forward(const net::AgentParams& p,
                           const std::vector<env::Observation>& seq) {
  const net::NetConfig& cfg = p.cfg();
  const int H = cfg.hidden, E = cfg.embed_out(), A = cfg.n_actions;
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  std::vector<double> h(static_cast<std::size_t>(H), 0.0);
  std::vector<double> c(static_cast<std::size_t>(H), 0.0);
  PlainOutputs out;
  for (const env::Observation& obs : seq) {
    std::vector<double> e(static_cast<std::size_t>(E));
    if (cfg.identity_embed) {
      for (int j = 0; j < E; ++j) e[j] = obs[static_cast<std::size_t>(j)] * cfg.obs_scale;
    } else {
      for (int j = 0; j < E; ++j) {
        double z = p.b_embed()(j, 0);
        for (int i = 0; i < cfg.obs_dim; ++i) {
          z += p.w_embed()(j, i) * obs[static_cast<std::size_t>(i)] * cfg.obs_scale;
        }
        e[static_cast<std::size_t>(j)] = std::tanh(z);
      }
    }
    std::vector<double> z(static_cast<std::size_t>(4 * H));
    for (int r = 0; r < 4 * H; ++r) {
      double acc = p.b_gates()(r, 0);
      for (int j = 0; j < E; ++j) acc += p.w_x()(r, j) * e[static_cast<std::size_t>(j)];
      for (int j = 0; j < H; ++j) acc += p.w_h()(r, j) * h[static_cast<std::size_t>(j)];
      z[static_cast<std::size_t>(r)] = acc;
    }
    for (int j = 0; j < H; ++j) {
      double gi = sig(z[static_cast<std::size_t>(j)]);
      double gf = sig(z[static_cast<std::size_t>(H + j)]);
      double gg = std::tanh(z[static_cast<std::size_t>(2 * H + j)]);
      double go = sig(z[static_cast<std::size_t>(3 * H + j)]);
      c[static_cast<std::size_t>(j)] = gf * c[static_cast<std::size_t>(j)] + gi * gg;
      h[static_cast<std::size_t>(j)] = go * std::tanh(c[static_cast<std::size_t>(j)]);
    }
    std::vector<double> logit(static_cast<std::size_t>(A));
    for (int a = 0; a < A; ++a) {
      double acc = p.b_policy()(a, 0);
      for (int j = 0; j < H; ++j) acc += p.w_policy()(a, j) * h[static_cast<std::size_t>(j)];
      logit[static_cast<std::size_t>(a)] = acc;
    }
    double v = p.b_value()(0, 0);
    for (int j = 0; j < H; ++j) v += p.w_value()(0, j) * h[static_cast<std::size_t>(j)];
    out.logits.push_back(std::move(logit));
    out.values.push_back(v);
  }
  return out;
}

}  // namespace

TEST_CASE("zero parameters give a uniform policy and zero value") {
  net::NetConfig cfg = small_cfg();
  net::AgentParams p(cfg);
  net::LstmState s = net::LstmState::zeros(cfg.hidden);
  net::StepOutput out = net::net_step(p, {0.3, -0.7, 0.2}, s);
  for (int a = 0; a < cfg.n_actions; ++a) CHECK(out.logits(a) == 0.0);
  CHECK(out.value == 0.0);
  std::vector<double> probs = net::softmax({0, 0, 0, 0});
  for (double v : probs) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("zero input and zero biases keep the hidden state at zero") {
  net::NetConfig cfg = small_cfg();
  cfg.identity_embed = true;
  cfg.d_embed = 0;
  Rng rng(5);
  net::AgentParams p = net::AgentParams::init(cfg, rng);
  p.b_gates().setZero();
  net::LstmState s = net::LstmState::zeros(cfg.hidden);
  net::net_step(p, {0.0, 0.0, 0.0}, s);
  CHECK(s.h.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.c.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward matches an independent scalar-loop LSTM") {
  for (bool identity : {false, true}) {
    net::NetConfig cfg = small_cfg();
    cfg.identity_embed = identity;
    cfg.obs_scale = 0.5;
    Rng rng(identity ? 21 : 22);
    net::AgentParams p = net::AgentParams::init(cfg, rng);
    std::vector<env::Observation> seq = random_obs_seq(cfg, 7, rng);
    net::ForwardCache fc = net::forward(p, seq);
    PlainOutputs ref = plain_forward(p, seq);
    for (int t = 0; t < fc.T; ++t) {
      for (int a = 0; a < cfg.n_actions; ++a) {
        CHECK(fc.logits(a, t) == doctest::Approx(ref.logits[static_cast<std::size_t>(t)][static_cast<std::size_t>(a)]).epsilon(1e-12));
      }
      CHECK(fc.values(t) == doctest::Approx(ref.values[static_cast<std::size_t>(t)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("net_step reproduces the forward cache column by column") {
  net::NetConfig cfg = small_cfg();
  Rng rng(9);
  net::AgentParams p = net::AgentParams::init(cfg, rng);
  std::vector<env::Observation> seq = random_obs_seq(cfg, 5, rng);
  net::ForwardCache fc = net::forward(p, seq);
  net::LstmState s = net::LstmState::zeros(cfg.hidden);
  for (int t = 0; t < fc.T; ++t) {
    net::StepOutput out = net::net_step(p, seq[static_cast<std::size_t>(t)], s);
    CHECK((out.logits - fc.logits.col(t)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(out.value == fc.values(t));
  }
}

TEST_CASE("backward matches central finite differences") {
  for (bool identity : {false, true}) {
    net::NetConfig cfg = small_cfg();
    cfg.identity_embed = identity;
    Rng rng(identity ? 31 : 32);
    net::AgentParams p = net::AgentParams::init(cfg, rng);
    const int T = 6;
    std::vector<env::Observation> seq = random_obs_seq(cfg, T, rng);

    // fixed linear loss L = sum_t <dlogits_t, logits_t> + dvalues_t * value_t
    Eigen::MatrixXd dlogits(cfg.n_actions, T);
    Eigen::VectorXd dvalues(T);
    for (int t = 0; t < T; ++t) {
      for (int a = 0; a < cfg.n_actions; ++a) dlogits(a, t) = rng.uniform(-1, 1);
      dvalues(t) = rng.uniform(-1, 1);
    }
    auto loss = [&](const net::AgentParams& q) {
      net::ForwardCache fc = net::forward(q, seq);
      double l = 0.0;
      for (int t = 0; t < T; ++t) {
        l += dlogits.col(t).dot(fc.logits.col(t)) + dvalues(t) * fc.values(t);
      }
      return l;
    };

    net::ForwardCache fc = net::forward(p, seq);
    net::AgentParams g = net::backward(p, fc, dlogits, dvalues);

    const double h = 1e-5;
    Eigen::Index n = p.size();
    // probe a spread of parameter indices across every block
    for (Eigen::Index idx = 0; idx < n; idx += std::max<Eigen::Index>(1, n / 97)) {
      net::AgentParams q = p;
      q.flat()(idx) = p.flat()(idx) + h;
      double lp = loss(q);
      q.flat()(idx) = p.flat()(idx) - h;
      double lm = loss(q);
      double fd = (lp - lm) / (2.0 * h);
      double denom = std::max({std::abs(fd), std::abs(g.flat()(idx)), 1e-8});
      CHECK(std::abs(fd - g.flat()(idx)) / denom < 1e-4);
    }
  }
}

TEST_CASE("softmax and friends") {
  std::vector<double> logits = {1.5, -0.5, 0.0, 2.0};
  std::vector<double> p = net::softmax(logits);
  double sum = 0.0;
  for (double v : p) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  // shift invariance
  std::vector<double> shifted = {1001.5, 999.5, 1000.0, 1002.0};
  std::vector<double> q = net::softmax(shifted);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-12));
  }

  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(net::log_prob_of(logits, static_cast<int>(i)) ==
          doctest::Approx(std::log(p[i])).epsilon(1e-12));
  }

  CHECK(net::entropy_of_logits({0, 0, 0, 0, 0, 0, 0, 0}) ==
        doctest::Approx(std::log(8.0)).epsilon(1e-12));

  std::vector<double> peaked = {10.0, 0.0, 0.0, 0.0};
  CHECK(net::softmax(peaked)[0] ==
        doctest::Approx(1.0 / (1.0 + 3.0 * std::exp(-10.0))).epsilon(1e-12));
  CHECK(net::softmax(peaked)[0] > 0.999);
  CHECK(net::greedy_index(peaked) == 0);
}

TEST_CASE("sampling is seeded and follows the softmax probabilities") {
  std::vector<double> logits = {std::log(0.6), std::log(0.3), std::log(0.1)};
  Rng a(4), b(4);
  for (int i = 0; i < 100; ++i) {
    CHECK(net::sample_index(logits, a) == net::sample_index(logits, b));
  }
  Rng rng(10);
  constexpr int kN = 30000;
  std::array<int, 3> counts{};
  for (int i = 0; i < kN; ++i) ++counts[static_cast<std::size_t>(net::sample_index(logits, rng))];
  std::array<double, 3> want = {0.6, 0.3, 0.1};
  for (std::size_t i = 0; i < 3; ++i) {
    double sigma = std::sqrt(kN * want[i] * (1.0 - want[i]));
    CHECK(std::abs(counts[i] - kN * want[i]) < 4.0 * sigma);
  }
}

TEST_CASE("checkpoint round trip is bit identical") {
  net::NetConfig cfg = small_cfg();
  Rng rng(77);
  net::AgentParams p = net::AgentParams::init(cfg, rng);
  const char* path = "ckpt_roundtrip.bin";
  net::save_checkpoint(path, p);
  net::AgentParams q = net::load_checkpoint(path);
  CHECK(q.cfg() == cfg);
  REQUIRE(q.size() == p.size());
  CHECK((q.flat() - p.flat()).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path);
  CHECK_THROWS(net::load_checkpoint(path));
}

TEST_CASE("agent policy maps flat indices to interact/label actions") {
  net::NetConfig cfg = small_cfg();  // 4 actions
  net::AgentParams p(cfg);
  p.b_policy()(3, 0) = 50.0;  // force argmax to the last action
  net::AgentPolicy greedy(p, 2, 0, true);
  greedy.begin_episode();
  env::PolicyDecision d = greedy.act({0, 0, 0});
  CHECK(d.action == env::Action::label(1));  // 3 - n_interact

  p.b_policy()(3, 0) = 0.0;
  p.b_policy()(0, 0) = 50.0;
  net::AgentPolicy greedy2(p, 2, 0, true);
  greedy2.begin_episode();
  d = greedy2.act({0, 0, 0});
  CHECK(d.action == env::Action::interact(0));
  CHECK(d.logits.size() == 4);
}

TEST_CASE("initialization respects the fan-in bound and forget bias") {
  net::NetConfig cfg;  // default 4 -> 64 -> 100
  Rng rng(3);
  net::AgentParams p = net::AgentParams::init(cfg, rng);
  double bound_wh = 1.0 / std::sqrt(100.0);
  CHECK(p.w_h().cwiseAbs().maxCoeff() <= bound_wh);
  CHECK(p.w_h().cwiseAbs().maxCoeff() > 0.5 * bound_wh);
  for (int j = 0; j < cfg.hidden; ++j) {
    CHECK(p.b_gates()(cfg.hidden + j, 0) == 1.0);
    CHECK(p.b_gates()(j, 0) == 0.0);
  }
}
