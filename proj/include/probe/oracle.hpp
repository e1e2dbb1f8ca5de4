#pragma once

#include <array>
#include <string>
#include <vector>

#include "probe/env.hpp"
#include "probe/heavier.hpp"

namespace probe::oracle {

// Monte Carlo distribution of the mass gap for one difficulty setting.
struct GapDistribution {
  double beta = 0.0;
  std::vector<double> gaps;  // sorted ascending
  double cdf(double x) const;
};

GapDistribution gap_cdf(double beta, int n_samples, Rng& rng);

// "beta,x,cdf" rows for each distribution.
std::string gap_distributions_csv(const std::vector<GapDistribution>& dists,
                                  int n_points = 200);

// Height of a u=0.5 block right after one noiseless poke action.  A block
// measuring below this is heavier than the reference, i.e. a heavy draw.
double reference_poke_height(const heavier::HeavierConfig& cfg = {});

// Empirical std of that measurement under the poke-strength noise,
// estimated once from 10^4 calibration pokes (fixed seed) and cached.
double calibrated_sigma_apex(const heavier::HeavierConfig& cfg = {});

// Pokes blocks in index order and labels as soon as one measures heavy;
// if the first three measure light the fourth is labeled unpoked.
class ScanPolicy : public env::Policy {
 public:
  explicit ScanPolicy(const heavier::HeavierConfig& cfg = {});

  void begin_episode() override;
  env::PolicyDecision act(const env::Observation& obs) override;

 private:
  double tau_;
  int pending_ = -1;  // block poked last step, awaiting its measurement
  int next_ = 0;
};

// Round-robin best-arm identification with confidence-radius elimination.
// Samples are taken only from pokes that start at rest so measurements are
// uncontaminated; airborne survivors are re-poked without recording.
class SuccessiveEliminationPolicy : public env::Policy {
 public:
  SuccessiveEliminationPolicy(double delta,
                              const heavier::HeavierConfig& cfg = {},
                              double radius_scale = 2.0);

  void begin_episode() override;
  env::PolicyDecision act(const env::Observation& obs) override;

 private:
  double radius(int n) const;

  double delta_;
  double sigma_;
  double radius_scale_;
  int timeout_steps_;
  std::array<int, 4> count_{};
  std::array<double, 4> mean_{};
  std::array<bool, 4> alive_{};
  int pending_ = -1;
  bool pending_clean_ = false;
  int t_ = 0;
};

}  // namespace probe::oracle
