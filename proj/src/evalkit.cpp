#include "probe/evalkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace probe::evalkit {

std::pair<double, double> wilson_interval(long successes, long n) {
  if (n == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  double p = static_cast<double>(successes) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (p + z2 / (2.0 * n)) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {center - half, center + half};
}

std::vector<env::EpisodeRecord> eval_run(env::Environment& environment,
                                         env::Policy& policy, long step_budget,
                                         std::uint64_t seed) {
  std::vector<env::EpisodeRecord> records;
  long used = 0;
  for (std::uint64_t ep = 0; used < step_budget; ++ep) {
    auto [rec, traj] = env::run_episode(environment, policy, mix_seed(seed, ep));
    if (used + rec.steps > step_budget) break;  // discard the overshoot
    used += rec.steps;
    records.push_back(std::move(rec));
  }
  return records;
}

EvalSummary summarize(const std::vector<env::EpisodeRecord>& records,
                      const std::string& condition) {
  EvalSummary s;
  s.condition = condition;
  std::vector<int> lengths;
  for (const env::EpisodeRecord& r : records) {
    if (r.termination == env::Termination::Timeout) {
      ++s.n_timeouts;
      continue;
    }
    ++s.n_episodes;
    if (r.correct) ++s.n_correct;
    ++s.length_hist[r.steps];
    lengths.push_back(r.steps);
  }
  if (s.n_episodes > 0) {
    s.p_correct = static_cast<double>(s.n_correct) / s.n_episodes;
    std::tie(s.wilson_lo, s.wilson_hi) = wilson_interval(s.n_correct, s.n_episodes);
    std::sort(lengths.begin(), lengths.end());
    std::size_t n = lengths.size();
    s.median_length = n % 2 == 1
                          ? lengths[n / 2]
                          : 0.5 * (lengths[n / 2 - 1] + lengths[n / 2]);
  }
  return s;
}

OlsFit ols_fit(const std::vector<std::pair<double, double>>& points) {
  const long n = static_cast<long>(points.size());
  if (n < 2) throw std::invalid_argument("ols_fit needs at least 2 points");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols_fit: zero x variance");
  OlsFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (const auto& [x, y] : points) {
    double r = y - fit.intercept - fit.slope * x;
    sse += r * r;
  }
  fit.slope_stderr = n > 2 ? std::sqrt(sse / (n - 2) / sxx) : 0.0;
  return fit;
}

Histogram Histogram::from_values(const std::vector<int>& values) {
  Histogram h;
  for (int v : values) {
    ++h.bins[v];
    ++h.total;
  }
  return h;
}

double Histogram::fraction_at_least(int k) const {
  if (total == 0) return 0.0;
  long count = 0;
  for (const auto& [v, c] : bins) {
    if (v >= k) count += c;
  }
  return static_cast<double>(count) / total;
}

std::vector<int> interaction_counts(const std::vector<env::EpisodeRecord>& records) {
  std::vector<int> out;
  for (const env::EpisodeRecord& r : records) {
    if (r.termination == env::Termination::Labeled) out.push_back(r.steps - 1);
  }
  return out;
}

RandomizedComparison randomized_comparison(env::Policy& policy,
                                           env::Environment& environment,
                                           long step_budget, std::uint64_t seed,
                                           std::uint64_t wrapper_seed) {
  RandomizedComparison cmp;
  std::vector<env::EpisodeRecord> learned =
      eval_run(environment, policy, step_budget, seed);
  env::RandomizedPolicy wrapped(policy, environment.n_interact(), wrapper_seed);
  std::vector<env::EpisodeRecord> randomized =
      eval_run(environment, wrapped, step_budget, seed);
  for (env::EpisodeRecord& r : randomized) r.randomized = true;
  cmp.learned = summarize(learned, "learned");
  cmp.randomized = summarize(randomized, "randomized");
  return cmp;
}

namespace {

// 95% CI on the median from binomial order statistics.
std::pair<double, double> median_ci(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const int n = static_cast<int>(v.size());
  if (n == 0) return {0.0, 0.0};
  // Cumulative Binomial(n, 1/2).
  std::vector<double> cdf(static_cast<std::size_t>(n) + 1);
  double logc = 0.0;  // log C(n, k)
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) logc += std::log(static_cast<double>(n - k + 1) / k);
    acc += std::exp(logc - n * std::log(2.0));
    cdf[static_cast<std::size_t>(k)] = acc;
  }
  int lo = 0;
  while (lo < n - 1 && cdf[static_cast<std::size_t>(lo)] < 0.025) ++lo;
  int hi = n - 1;
  while (hi > 0 && 1.0 - cdf[static_cast<std::size_t>(hi - 1)] > 0.975) ++hi;
  hi = std::min(hi, n - 1);
  if (hi < lo) hi = lo;
  return {v[static_cast<std::size_t>(lo)], v[static_cast<std::size_t>(hi)]};
}

}  // namespace

std::vector<SweepRow> control_dt_sweep(const net::AgentParams& params,
                                       const towers::TowersConfig& base_cfg,
                                       const std::vector<double>& dts,
                                       int episodes_per_dt, std::uint64_t seed) {
  std::vector<SweepRow> rows;
  for (double dt : dts) {
    towers::TowersConfig cfg = base_cfg;
    cfg.control_dt = dt;
    // Constant real-time budget across control time steps.
    cfg.timeout_steps = static_cast<int>(
        std::lround(base_cfg.timeout_steps * base_cfg.control_dt / dt));
    towers::TowersEnv environment(cfg);
    net::AgentPolicy policy(params, environment.n_interact(),
                            mix_seed(seed, 0xD7));
    SweepRow row;
    row.control_dt = dt;
    long correct = 0, labeled = 0;
    std::vector<double> seconds;
    for (int ep = 0; ep < episodes_per_dt; ++ep) {
      auto [rec, traj] = env::run_episode(
          environment, policy, mix_seed(seed, static_cast<std::uint64_t>(ep)));
      if (rec.termination == env::Termination::Labeled) {
        ++labeled;
        if (rec.correct) ++correct;
        seconds.push_back(rec.steps * dt);
      }
    }
    row.n_episodes = labeled;
    if (labeled > 0) {
      row.p_correct = static_cast<double>(correct) / labeled;
      std::tie(row.wilson_lo, row.wilson_hi) = wilson_interval(correct, labeled);
      std::vector<double> sorted = seconds;
      std::sort(sorted.begin(), sorted.end());
      std::size_t n = sorted.size();
      row.median_seconds = n % 2 == 1
                               ? sorted[n / 2]
                               : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
      std::tie(row.seconds_ci_lo, row.seconds_ci_hi) = median_ci(seconds);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string records_to_ndjson(const std::vector<env::EpisodeRecord>& records) {
  std::string out;
  for (const env::EpisodeRecord& r : records) {
    out += env::record_to_ndjson(r);
    out += '\n';
  }
  return out;
}

std::string summary_csv(const std::vector<EvalSummary>& summaries) {
  std::ostringstream os;
  os << "condition,n_episodes,n_timeouts,p_correct,wilson_lo,wilson_hi,median_length\n";
  for (const EvalSummary& s : summaries) {
    os << s.condition << "," << s.n_episodes << "," << s.n_timeouts << ","
       << s.p_correct << "," << s.wilson_lo << "," << s.wilson_hi << ","
       << s.median_length << "\n";
  }
  return os.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "control_dt,p_correct,wilson_lo,wilson_hi,median_seconds,"
        "seconds_ci_lo,seconds_ci_hi,n_episodes\n";
  for (const SweepRow& r : rows) {
    os << r.control_dt << "," << r.p_correct << "," << r.wilson_lo << ","
       << r.wilson_hi << "," << r.median_seconds << "," << r.seconds_ci_lo
       << "," << r.seconds_ci_hi << "," << r.n_episodes << "\n";
  }
  return os.str();
}

std::vector<std::pair<double, double>> gap_length_points(
    const std::vector<env::EpisodeRecord>& records) {
  std::vector<std::pair<double, double>> pts;
  for (const env::EpisodeRecord& r : records) {
    if (r.termination != env::Termination::Labeled) continue;
    if (!r.instance.contains("mass_gap")) continue;
    pts.emplace_back(r.instance["mass_gap"].get<double>(),
                     static_cast<double>(r.steps));
  }
  return pts;
}

std::string gap_bin_stats_csv(const std::vector<env::EpisodeRecord>& records) {
  constexpr int kBins = 10;
  std::array<long, kBins> n{};
  std::array<double, kBins> sum{}, sumsq{};
  for (const auto& [gap, len] : gap_length_points(records)) {
    int b = std::min(kBins - 1, static_cast<int>(gap * kBins));
    auto bi = static_cast<std::size_t>(b);
    ++n[bi];
    sum[bi] += len;
    sumsq[bi] += len * len;
  }
  std::ostringstream os;
  os << "gap_bin_lo,gap_bin_hi,n,mean_length,std_length\n";
  for (int b = 0; b < kBins; ++b) {
    auto bi = static_cast<std::size_t>(b);
    double mean = n[bi] > 0 ? sum[bi] / n[bi] : 0.0;
    double var = n[bi] > 0 ? std::max(0.0, sumsq[bi] / n[bi] - mean * mean) : 0.0;
    os << b / double(kBins) << "," << (b + 1) / double(kBins) << "," << n[bi]
       << "," << mean << "," << std::sqrt(var) << "\n";
  }
  return os.str();
}

std::string gap_length_csv(const std::vector<env::EpisodeRecord>& records,
                           const OlsFit& fit) {
  std::ostringstream os;
  os << "mass_gap,episode_length,ols_slope,ols_intercept,ols_slope_stderr\n";
  bool first = true;
  for (const auto& [gap, len] : gap_length_points(records)) {
    os << gap << "," << len;
    if (first) {
      os << "," << fit.slope << "," << fit.intercept << "," << fit.slope_stderr;
      first = false;
    } else {
      os << ",,,";
    }
    os << "\n";
  }
  return os.str();
}

std::string histogram_csv(
    const std::vector<std::pair<std::string, Histogram>>& hists) {
  std::ostringstream os;
  os << "condition,length,count\n";
  for (const auto& [name, h] : hists) {
    for (const auto& [v, c] : h.bins) {
      os << name << "," << v << "," << c << "\n";
    }
  }
  return os.str();
}

}  // namespace probe::evalkit
