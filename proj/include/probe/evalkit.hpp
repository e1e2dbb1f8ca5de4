#pragma once

#include <map>
#include <string>
#include <vector>

#include "probe/env.hpp"
#include "probe/net.hpp"
#include "probe/towers.hpp"

namespace probe::evalkit {

// Wilson 95% score interval for a binomial proportion.
std::pair<double, double> wilson_interval(long successes, long n);

struct EvalSummary {
  std::string condition;
  long n_episodes = 0;   // labeled episodes
  long n_timeouts = 0;
  long n_correct = 0;
  double p_correct = 0.0;  // timeouts excluded
  double wilson_lo = 0.0, wilson_hi = 0.0;
  std::map<int, long> length_hist;  // steps -> count, labeled episodes
  double median_length = 0.0;
};

// Runs complete episodes until the cumulative step count reaches the
// budget; a final episode that would overshoot is discarded.
std::vector<env::EpisodeRecord> eval_run(env::Environment& environment,
                                         env::Policy& policy, long step_budget,
                                         std::uint64_t seed);

EvalSummary summarize(const std::vector<env::EpisodeRecord>& records,
                      const std::string& condition);

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  long n = 0;
};

OlsFit ols_fit(const std::vector<std::pair<double, double>>& points);

struct Histogram {
  std::map<int, long> bins;
  long total = 0;

  static Histogram from_values(const std::vector<int>& values);
  // Fraction of counted values >= k.
  double fraction_at_least(int k) const;
};

// Interaction-step counts of labeled episodes (timeouts keep all steps).
std::vector<int> interaction_counts(const std::vector<env::EpisodeRecord>& records);

struct RandomizedComparison {
  EvalSummary learned;
  EvalSummary randomized;
};

RandomizedComparison randomized_comparison(env::Policy& policy,
                                           env::Environment& environment,
                                           long step_budget,
                                           std::uint64_t seed,
                                           std::uint64_t wrapper_seed);

struct SweepRow {
  double control_dt = 0.0;
  double p_correct = 0.0;
  double wilson_lo = 0.0, wilson_hi = 0.0;
  double median_seconds = 0.0;
  double seconds_ci_lo = 0.0, seconds_ci_hi = 0.0;
  long n_episodes = 0;
};

// Evaluates a fist agent trained at control_dt=0.1 across control time
// steps, 50 episodes each; the step timeout is rescaled so the real-time
// budget stays constant.
std::vector<SweepRow> control_dt_sweep(const net::AgentParams& params,
                                       const towers::TowersConfig& base_cfg,
                                       const std::vector<double>& dts,
                                       int episodes_per_dt, std::uint64_t seed);

std::string records_to_ndjson(const std::vector<env::EpisodeRecord>& records);
std::string summary_csv(const std::vector<EvalSummary>& summaries);
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string gap_length_csv(const std::vector<env::EpisodeRecord>& records,
                           const OlsFit& fit);
std::string histogram_csv(const std::vector<std::pair<std::string, Histogram>>& hists);

// Mean and standard deviation of episode length in 10 equal-width gap
// bins; the error-bar companion of the gap/length scatter.
std::string gap_bin_stats_csv(const std::vector<env::EpisodeRecord>& records);

// (gap, length) points of labeled heavier episodes.
std::vector<std::pair<double, double>> gap_length_points(
    const std::vector<env::EpisodeRecord>& records);

}  // namespace probe::evalkit
