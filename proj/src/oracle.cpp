#include "probe/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace probe::oracle {

double GapDistribution::cdf(double x) const {
  auto it = std::upper_bound(gaps.begin(), gaps.end(), x);
  return static_cast<double>(it - gaps.begin()) /
         static_cast<double>(gaps.size());
}

GapDistribution gap_cdf(double beta, int n_samples, Rng& rng) {
  GapDistribution d;
  d.beta = beta;
  d.gaps.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    d.gaps.push_back(heavier::sample_masses(beta, rng).mass_gap);
  }
  std::sort(d.gaps.begin(), d.gaps.end());
  return d;
}

std::string gap_distributions_csv(const std::vector<GapDistribution>& dists,
                                  int n_points) {
  std::ostringstream os;
  os << "beta,x,cdf\n";
  for (const GapDistribution& d : dists) {
    for (int i = 0; i <= n_points; ++i) {
      double x = static_cast<double>(i) / n_points;
      os << d.beta << "," << x << "," << d.cdf(x) << "\n";
    }
  }
  return os.str();
}

namespace {

// z of a block of given mass after one poke action from rest.
double poke_height(double mass, double force, const heavier::HeavierConfig& cfg) {
  phys::VerticalWorld w;
  w.blocks[0].mass = mass;
  std::array<double, 4> f{force, 0.0, 0.0, 0.0};
  for (int s = 0; s < cfg.control_repeat; ++s) w.step(f, cfg.physics_dt);
  return w.blocks[0].z;
}

}  // namespace

double reference_poke_height(const heavier::HeavierConfig& cfg) {
  return poke_height(0.5 + 1.5 * 0.5, cfg.force_newtons, cfg);
}

double calibrated_sigma_apex(const heavier::HeavierConfig& cfg) {
  static const double cached = [&cfg] {
    constexpr int kN = 10000;
    Rng rng(0xCA11B8A7E);
    double mass = 0.5 + 1.5 * 0.5;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < kN; ++i) {
      double eps = std::clamp(rng.normal(1.0, cfg.poke_noise_sigma), 0.8, 1.2);
      double z = poke_height(mass, cfg.force_newtons * eps, cfg);
      sum += z;
      sumsq += z * z;
    }
    double mean = sum / kN;
    return std::sqrt(std::max(0.0, sumsq / kN - mean * mean));
  }();
  return cached;
}

ScanPolicy::ScanPolicy(const heavier::HeavierConfig& cfg)
    : tau_(reference_poke_height(cfg)) {}

void ScanPolicy::begin_episode() {
  pending_ = -1;
  next_ = 0;
}

env::PolicyDecision ScanPolicy::act(const env::Observation& obs) {
  env::PolicyDecision d;
  if (pending_ >= 0) {
    double z = obs[static_cast<std::size_t>(pending_)];
    if (z < tau_) {
      d.action = env::Action::label(pending_);  // measured heavy
      return d;
    }
    pending_ = -1;
  }
  if (next_ >= 3) {
    d.action = env::Action::label(3);  // first three measured light
    return d;
  }
  pending_ = next_++;
  d.action = env::Action::interact(pending_);
  return d;
}

SuccessiveEliminationPolicy::SuccessiveEliminationPolicy(
    double delta, const heavier::HeavierConfig& cfg, double radius_scale)
    : delta_(delta),
      sigma_(cfg.poke_noise_sigma > 0.0 ? calibrated_sigma_apex(cfg) : 0.0),
      radius_scale_(radius_scale),
      timeout_steps_(cfg.timeout_steps) {}

void SuccessiveEliminationPolicy::begin_episode() {
  count_.fill(0);
  mean_.fill(0.0);
  alive_.fill(true);
  pending_ = -1;
  pending_clean_ = false;
  t_ = 0;
}

double SuccessiveEliminationPolicy::radius(int n) const {
  return radius_scale_ * sigma_ * std::sqrt(std::log(1.0 / delta_) / n);
}

env::PolicyDecision SuccessiveEliminationPolicy::act(const env::Observation& obs) {
  env::PolicyDecision d;
  if (pending_ >= 0 && pending_clean_) {
    auto p = static_cast<std::size_t>(pending_);
    ++count_[p];
    mean_[p] += (obs[p] - mean_[p]) / count_[p];
  }
  pending_ = -1;

  // Lower measured height means heavier; eliminate blocks whose lower
  // confidence bound clears some other block's upper bound.
  for (int a = 0; a < 4; ++a) {
    if (!alive_[static_cast<std::size_t>(a)] || count_[static_cast<std::size_t>(a)] == 0) continue;
    double lo_a = mean_[static_cast<std::size_t>(a)] - radius(count_[static_cast<std::size_t>(a)]);
    for (int b = 0; b < 4; ++b) {
      if (b == a || !alive_[static_cast<std::size_t>(b)] || count_[static_cast<std::size_t>(b)] == 0) continue;
      double hi_b = mean_[static_cast<std::size_t>(b)] + radius(count_[static_cast<std::size_t>(b)]);
      if (lo_a > hi_b) {
        alive_[static_cast<std::size_t>(a)] = false;
        break;
      }
    }
  }

  std::vector<int> survivors;
  for (int i = 0; i < 4; ++i) {
    if (alive_[static_cast<std::size_t>(i)]) survivors.push_back(i);
  }

  auto best_guess = [&] {
    int best = -1;
    for (int i : survivors) {
      auto s = static_cast<std::size_t>(i);
      if (count_[s] == 0) continue;
      if (best < 0 || mean_[s] < mean_[static_cast<std::size_t>(best)]) best = i;
    }
    return best < 0 ? 0 : best;
  };

  ++t_;
  if (survivors.size() == 1) {
    d.action = env::Action::label(survivors.front());
    return d;
  }
  if (t_ >= timeout_steps_ - 1) {
    d.action = env::Action::label(best_guess());
    return d;
  }

  // Prefer a grounded survivor with the fewest samples; otherwise re-poke
  // the lowest one without recording.
  int pick = -1;
  for (int i : survivors) {
    auto s = static_cast<std::size_t>(i);
    if (obs[s] != 0.0) continue;
    if (pick < 0 || count_[s] < count_[static_cast<std::size_t>(pick)]) pick = i;
  }
  if (pick >= 0) {
    pending_clean_ = true;
  } else {
    pending_clean_ = false;
    pick = survivors.front();
    for (int i : survivors) {
      if (obs[static_cast<std::size_t>(i)] < obs[static_cast<std::size_t>(pick)]) pick = i;
    }
  }
  pending_ = pick;
  d.action = env::Action::interact(pick);
  return d;
}

}  // namespace probe::oracle
