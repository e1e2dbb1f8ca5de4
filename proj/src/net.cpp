#include "probe/net.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace probe::net {

namespace {

struct Layout {
  Eigen::Index we, be, wx, wh, bg, wp, bp, wv, bv, total;
};

Layout layout_of(const NetConfig& cfg) {
  const Eigen::Index O = cfg.obs_dim, H = cfg.hidden, A = cfg.n_actions;
  const Eigen::Index E = cfg.embed_out();
  Layout l{};
  Eigen::Index off = 0;
  l.we = off; off += cfg.identity_embed ? 0 : E * O;
  l.be = off; off += cfg.identity_embed ? 0 : E;
  l.wx = off; off += 4 * H * E;
  l.wh = off; off += 4 * H * H;
  l.bg = off; off += 4 * H;
  l.wp = off; off += A * H;
  l.bp = off; off += A;
  l.wv = off; off += H;
  l.bv = off; off += 1;
  l.total = off;
  return l;
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

}  // namespace

AgentParams::AgentParams(const NetConfig& cfg) : cfg_(cfg) {
  flat_ = Eigen::VectorXd::Zero(layout_of(cfg).total);
}

#define PROBE_PARAM_BLOCK(name, offs, rows, cols)                         \
  AgentParams::Map AgentParams::name() {                                  \
    Layout l = layout_of(cfg_);                                           \
    return Map(flat_.data() + l.offs, rows, cols);                        \
  }                                                                       \
  AgentParams::ConstMap AgentParams::name() const {                       \
    Layout l = layout_of(cfg_);                                           \
    return ConstMap(flat_.data() + l.offs, rows, cols);                   \
  }

PROBE_PARAM_BLOCK(w_embed, we, cfg_.embed_out(), cfg_.identity_embed ? 0 : cfg_.obs_dim)
PROBE_PARAM_BLOCK(b_embed, be, cfg_.identity_embed ? 0 : cfg_.embed_out(), 1)
PROBE_PARAM_BLOCK(w_x, wx, 4 * cfg_.hidden, cfg_.embed_out())
PROBE_PARAM_BLOCK(w_h, wh, 4 * cfg_.hidden, cfg_.hidden)
PROBE_PARAM_BLOCK(b_gates, bg, 4 * cfg_.hidden, 1)
PROBE_PARAM_BLOCK(w_policy, wp, cfg_.n_actions, cfg_.hidden)
PROBE_PARAM_BLOCK(b_policy, bp, cfg_.n_actions, 1)
PROBE_PARAM_BLOCK(w_value, wv, 1, cfg_.hidden)
PROBE_PARAM_BLOCK(b_value, bv, 1, 1)

#undef PROBE_PARAM_BLOCK

AgentParams AgentParams::init(const NetConfig& cfg, Rng& rng) {
  AgentParams p(cfg);
  auto fill = [&rng](Map m, int fan_in) {
    double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        m(r, c) = rng.uniform(-s, s);
      }
    }
  };
  if (!cfg.identity_embed) fill(p.w_embed(), cfg.obs_dim);
  fill(p.w_x(), cfg.embed_out());
  fill(p.w_h(), cfg.hidden);
  fill(p.w_policy(), cfg.hidden);
  fill(p.w_value(), cfg.hidden);
  // Forget-gate bias starts open.
  p.b_gates().block(cfg.hidden, 0, cfg.hidden, 1).setConstant(1.0);
  return p;
}

LstmState LstmState::zeros(int hidden) {
  return {Eigen::VectorXd::Zero(hidden), Eigen::VectorXd::Zero(hidden)};
}

namespace {

struct StepActs {
  Eigen::VectorXd x, e, gi, gf, gg, go, c, tanh_c, h, logits;
  double value = 0.0;
};

StepActs run_step(const AgentParams& p, const env::Observation& obs,
                  const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev) {
  const NetConfig& cfg = p.cfg();
  if (static_cast<int>(obs.size()) != cfg.obs_dim) {
    throw std::invalid_argument("observation dimension mismatch");
  }
  const int H = cfg.hidden;
  StepActs a;
  a.x = Eigen::Map<const Eigen::VectorXd>(obs.data(), cfg.obs_dim) * cfg.obs_scale;
  a.e = cfg.identity_embed
            ? a.x
            : (p.w_embed() * a.x + p.b_embed().col(0)).array().tanh().matrix();
  Eigen::VectorXd z = p.w_x() * a.e + p.w_h() * h_prev + p.b_gates().col(0);
  a.gi = sigmoid(z.segment(0, H));
  a.gf = sigmoid(z.segment(H, H));
  a.gg = z.segment(2 * H, H).array().tanh().matrix();
  a.go = sigmoid(z.segment(3 * H, H));
  a.c = a.gf.cwiseProduct(c_prev) + a.gi.cwiseProduct(a.gg);
  a.tanh_c = a.c.array().tanh().matrix();
  a.h = a.go.cwiseProduct(a.tanh_c);
  a.logits = p.w_policy() * a.h + p.b_policy().col(0);
  a.value = (p.w_value() * a.h)(0, 0) + p.b_value()(0, 0);
  if (!a.logits.allFinite() || !std::isfinite(a.value)) {
    throw std::runtime_error("network produced non-finite output");
  }
  return a;
}

}  // namespace

StepOutput net_step(const AgentParams& params, const env::Observation& obs,
                    LstmState& state) {
  StepActs a = run_step(params, obs, state.h, state.c);
  state.h = a.h;
  state.c = a.c;
  return {std::move(a.logits), a.value};
}

ForwardCache forward(const AgentParams& params,
                     const std::vector<env::Observation>& obs_seq) {
  const NetConfig& cfg = params.cfg();
  const int T = static_cast<int>(obs_seq.size());
  if (T < 1) throw std::invalid_argument("empty observation sequence");
  const int H = cfg.hidden, E = cfg.embed_out();
  ForwardCache fc;
  fc.T = T;
  fc.x.resize(cfg.obs_dim, T);
  fc.e.resize(E, T);
  fc.gi.resize(H, T); fc.gf.resize(H, T); fc.gg.resize(H, T); fc.go.resize(H, T);
  fc.c.resize(H, T); fc.tanh_c.resize(H, T); fc.h.resize(H, T);
  fc.logits.resize(cfg.n_actions, T);
  fc.values.resize(T);
  LstmState s = LstmState::zeros(H);
  for (int t = 0; t < T; ++t) {
    StepActs a = run_step(params, obs_seq[t], s.h, s.c);
    s.h = a.h;
    s.c = a.c;
    fc.x.col(t) = a.x;
    fc.e.col(t) = a.e;
    fc.gi.col(t) = a.gi; fc.gf.col(t) = a.gf;
    fc.gg.col(t) = a.gg; fc.go.col(t) = a.go;
    fc.c.col(t) = a.c; fc.tanh_c.col(t) = a.tanh_c; fc.h.col(t) = a.h;
    fc.logits.col(t) = a.logits;
    fc.values(t) = a.value;
  }
  return fc;
}

AgentParams backward(const AgentParams& params, const ForwardCache& fc,
                     const Eigen::MatrixXd& dlogits,
                     const Eigen::VectorXd& dvalues) {
  const NetConfig& cfg = params.cfg();
  const int H = cfg.hidden, T = fc.T;
  if (dlogits.cols() != T || dvalues.size() != T) {
    throw std::invalid_argument("loss gradient shape mismatch");
  }
  AgentParams g(cfg);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(H);
  for (int t = T - 1; t >= 0; --t) {
    g.w_policy() += dlogits.col(t) * fc.h.col(t).transpose();
    g.b_policy().col(0) += dlogits.col(t);
    g.w_value() += dvalues(t) * fc.h.col(t).transpose();
    g.b_value()(0, 0) += dvalues(t);

    Eigen::VectorXd dh = params.w_policy().transpose() * dlogits.col(t) +
                         params.w_value().transpose() * dvalues(t) + dh_next;
    Eigen::ArrayXd o = fc.go.col(t).array();
    Eigen::ArrayXd tc = fc.tanh_c.col(t).array();
    Eigen::ArrayXd do_ = dh.array() * tc;
    Eigen::ArrayXd dc = dh.array() * o * (1.0 - tc * tc) + dc_next.array();
    Eigen::ArrayXd i = fc.gi.col(t).array();
    Eigen::ArrayXd f = fc.gf.col(t).array();
    Eigen::ArrayXd gg = fc.gg.col(t).array();
    Eigen::ArrayXd c_prev = t > 0 ? fc.c.col(t - 1).array()
                                  : Eigen::ArrayXd::Zero(H).eval();
    Eigen::VectorXd dz(4 * H);
    dz.segment(0, H) = (dc * gg * i * (1.0 - i)).matrix();
    dz.segment(H, H) = (dc * c_prev * f * (1.0 - f)).matrix();
    dz.segment(2 * H, H) = (dc * i * (1.0 - gg * gg)).matrix();
    dz.segment(3 * H, H) = (do_ * o * (1.0 - o)).matrix();
    dc_next = (dc * f).matrix();

    g.w_x() += dz * fc.e.col(t).transpose();
    if (t > 0) g.w_h() += dz * fc.h.col(t - 1).transpose();
    g.b_gates().col(0) += dz;
    dh_next = params.w_h().transpose() * dz;

    if (!cfg.identity_embed) {
      Eigen::VectorXd de = params.w_x().transpose() * dz;
      Eigen::ArrayXd e = fc.e.col(t).array();
      Eigen::VectorXd dpre = (de.array() * (1.0 - e * e)).matrix();
      g.w_embed() += dpre * fc.x.col(t).transpose();
      g.b_embed().col(0) += dpre;
    }
  }
  if (!g.flat().allFinite()) {
    throw std::runtime_error("non-finite gradient");
  }
  return g;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double entropy_of_logits(const std::vector<double>& logits) {
  std::vector<double> p = softmax(logits);
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double log_prob_of(const std::vector<double>& logits, int index) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  return logits[static_cast<std::size_t>(index)] - mx - std::log(sum);
}

int sample_index(const std::vector<double>& logits, Rng& rng) {
  std::vector<double> p = softmax(logits);
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

int greedy_index(const std::vector<double>& logits) {
  int best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

void save_checkpoint(const std::string& path, const AgentParams& params) {
  const NetConfig& cfg = params.cfg();
  nlohmann::json header = {
      {"obs_dim", cfg.obs_dim},   {"n_actions", cfg.n_actions},
      {"d_e", cfg.d_embed},       {"hidden", cfg.hidden},
      {"version", 1},             {"identity_embed", cfg.identity_embed},
      {"obs_scale", cfg.obs_scale}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out << header.dump() << "\n";
  out.write(reinterpret_cast<const char*>(params.flat().data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

AgentParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing checkpoint: " + path);
  std::string line;
  std::getline(in, line);
  nlohmann::json header = nlohmann::json::parse(line);
  NetConfig cfg;
  cfg.obs_dim = header.at("obs_dim").get<int>();
  cfg.n_actions = header.at("n_actions").get<int>();
  cfg.d_embed = header.at("d_e").get<int>();
  cfg.hidden = header.at("hidden").get<int>();
  cfg.identity_embed = header.value("identity_embed", false);
  cfg.obs_scale = header.value("obs_scale", 1.0);
  AgentParams p(cfg);
  in.read(reinterpret_cast<char*>(p.flat().data()),
          static_cast<std::streamsize>(p.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(p.size() * sizeof(double))) {
    throw std::runtime_error("checkpoint truncated: " + path);
  }
  return p;
}

AgentPolicy::AgentPolicy(const AgentParams& params, int n_interact,
                         std::uint64_t seed, bool greedy)
    : params_(&params),
      n_interact_(n_interact),
      rng_(seed),
      greedy_(greedy),
      state_(LstmState::zeros(params.cfg().hidden)) {}

void AgentPolicy::begin_episode() {
  state_ = LstmState::zeros(params_->cfg().hidden);
}

env::PolicyDecision AgentPolicy::act(const env::Observation& obs) {
  StepOutput out = net_step(*params_, obs, state_);
  env::PolicyDecision d;
  d.logits.assign(out.logits.data(), out.logits.data() + out.logits.size());
  d.value = out.value;
  int idx = greedy_ ? greedy_index(d.logits) : sample_index(d.logits, rng_);
  d.action = idx < n_interact_ ? env::Action::interact(idx)
                               : env::Action::label(idx - n_interact_);
  return d;
}

}  // namespace probe::net
