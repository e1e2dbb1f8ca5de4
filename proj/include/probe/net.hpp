#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "probe/env.hpp"
#include "probe/rng.hpp"

namespace probe::net {

struct NetConfig {
  int obs_dim = 4;
  int n_actions = 8;
  int d_embed = 64;        // tanh embedding width; ignored in identity mode
  int hidden = 100;
  bool identity_embed = false;  // feed observations into the LSTM directly
  double obs_scale = 1.0;       // applied to observations before the embed

  int embed_out() const { return identity_embed ? obs_dim : d_embed; }
  bool operator==(const NetConfig&) const = default;
};

// All weights in one flat vector; blocks are mapped views.  Gate rows are
// laid out as [input; forget; candidate; output], each `hidden` rows.
class AgentParams {
 public:
  AgentParams() = default;
  explicit AgentParams(const NetConfig& cfg);

  static AgentParams init(const NetConfig& cfg, Rng& rng);

  const NetConfig& cfg() const { return cfg_; }
  Eigen::VectorXd& flat() { return flat_; }
  const Eigen::VectorXd& flat() const { return flat_; }
  Eigen::Index size() const { return flat_.size(); }

  using Map = Eigen::Map<Eigen::MatrixXd>;
  using ConstMap = Eigen::Map<const Eigen::MatrixXd>;

  Map w_embed();
  Map b_embed();
  Map w_x();
  Map w_h();
  Map b_gates();
  Map w_policy();
  Map b_policy();
  Map w_value();
  Map b_value();
  ConstMap w_embed() const;
  ConstMap b_embed() const;
  ConstMap w_x() const;
  ConstMap w_h() const;
  ConstMap b_gates() const;
  ConstMap w_policy() const;
  ConstMap b_policy() const;
  ConstMap w_value() const;
  ConstMap b_value() const;

 private:
  NetConfig cfg_;
  Eigen::VectorXd flat_;
};

struct LstmState {
  Eigen::VectorXd h, c;
  static LstmState zeros(int hidden);
};

struct StepOutput {
  Eigen::VectorXd logits;
  double value = 0.0;
};

// Single recurrent step; advances `state` in place.
StepOutput net_step(const AgentParams& params, const env::Observation& obs,
                    LstmState& state);

// Per-step activations of a full unroll, for BPTT.
struct ForwardCache {
  Eigen::MatrixXd x;       // obs_dim x T (scaled observations)
  Eigen::MatrixXd e;       // embed_out x T
  Eigen::MatrixXd gi, gf, gg, go;  // hidden x T, post-activation
  Eigen::MatrixXd c, tanh_c, h;    // hidden x T
  Eigen::MatrixXd logits;  // n_actions x T
  Eigen::VectorXd values;  // T
  int T = 0;
};

ForwardCache forward(const AgentParams& params,
                     const std::vector<env::Observation>& obs_seq);

// Exact gradients through the full unroll given dLoss/dlogits and
// dLoss/dvalue per step.  Output has the same flat layout as the params.
AgentParams backward(const AgentParams& params, const ForwardCache& cache,
                     const Eigen::MatrixXd& dlogits,
                     const Eigen::VectorXd& dvalues);

std::vector<double> softmax(const std::vector<double>& logits);
double entropy_of_logits(const std::vector<double>& logits);
double log_prob_of(const std::vector<double>& logits, int index);
int sample_index(const std::vector<double>& logits, Rng& rng);
int greedy_index(const std::vector<double>& logits);

// Checkpoint: one JSON header line, then the flat little-endian f64 array.
void save_checkpoint(const std::string& path, const AgentParams& params);
AgentParams load_checkpoint(const std::string& path);

// Wraps parameters as an episode policy: zeroed state at episode start,
// softmax sampling (or greedy argmax) from the policy head.
class AgentPolicy : public env::Policy {
 public:
  AgentPolicy(const AgentParams& params, int n_interact, std::uint64_t seed,
              bool greedy = false);

  void begin_episode() override;
  env::PolicyDecision act(const env::Observation& obs) override;

 private:
  const AgentParams* params_;
  int n_interact_;
  Rng rng_;
  bool greedy_;
  LstmState state_;
};

}  // namespace probe::net
