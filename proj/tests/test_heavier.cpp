#include <doctest.h>

#include <cmath>

#include "probe/heavier.hpp"
#include "probe/oracle.hpp"

using namespace probe;

namespace {

heavier::MassAssignment assignment_from_u(const std::array<double, 4>& u) {
  heavier::MassAssignment m;
  m.u = u;
  for (int i = 0; i < 4; ++i) m.masses[i] = 0.5 + 1.5 * u[i];
  std::array<double, 4> sorted = u;
  std::sort(sorted.begin(), sorted.end());
  m.mass_gap = sorted[3] - sorted[2];
  m.beta = 0.0;
  return m;
}

}  // namespace

TEST_CASE("Beta inverse CDF draws") {
  // Beta(3,1): U=0.5 -> 0.5^(1/3); Beta(1,3) mirrors it.
  CHECK(std::pow(0.5, 1.0 / 3.0) == doctest::Approx(0.79370).epsilon(1e-4));
  CHECK(1.0 - std::pow(0.5, 1.0 / 3.0) == doctest::Approx(0.20630).epsilon(1e-4));

  // The sampler realizes exactly these transforms.
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    heavier::MassAssignment m = heavier::sample_masses(3.0, rng);
    for (int b = 0; b < 4; ++b) {
      CHECK(m.u[b] >= 0.0);
      CHECK(m.u[b] <= 1.0);
      CHECK(m.masses[b] == doctest::Approx(0.5 + 1.5 * m.u[b]));
    }
    CHECK(m.mass_gap >= 0.0);
  }
}

TEST_CASE("heavy draw mean matches Beta(beta,1) mean beta/(beta+1)") {
  Rng rng(123);
  constexpr int kN = 100000;
  double sum = 0.0;
  for (int i = 0; i < kN; ++i) {
    heavier::MassAssignment m = heavier::sample_masses(10.0, rng);
    sum += m.u[static_cast<std::size_t>(m.heavy_index)];
  }
  CHECK(sum / kN == doctest::Approx(10.0 / 11.0).epsilon(0.003 / (10.0 / 11.0)));
}

TEST_CASE("action space is 4 interactions + 4 labels") {
  heavier::HeavierEnv e;
  CHECK(e.n_interact() == 4);
  CHECK(e.n_labels() == 4);
  CHECK(e.n_actions() == 8);
}

TEST_CASE("initial observation carries no mass information") {
  heavier::HeavierEnv e;
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    env::Observation obs = e.reset(seed);
    CHECK(obs == env::Observation{0, 0, 0, 0});
  }
}

TEST_CASE("same seed reproduces identical instance parameters") {
  heavier::HeavierEnv e;
  e.reset(777);
  auto m1 = e.masses();
  e.reset(777);
  auto m2 = e.masses();
  CHECK(m1.masses == m2.masses);
  CHECK(m1.heavy_index == m2.heavy_index);
}

TEST_CASE("poking a 2 kg block leaves it on the ground") {
  heavier::HeavierConfig cfg;
  cfg.poke_noise_sigma = 0.0;
  heavier::HeavierEnv e(cfg);
  e.reset_with(assignment_from_u({1.0, 0.0, 0.0, 0.0}), 1);
  env::StepResult r = e.step(env::Action::interact(0));
  CHECK(r.obs[0] == 0.0);
}

TEST_CASE("lighter block flies visibly higher after identical pokes") {
  heavier::HeavierConfig cfg;
  cfg.poke_noise_sigma = 0.0;
  heavier::HeavierEnv e(cfg);
  e.reset_with(assignment_from_u({0.2, 0.8, 0.0, 0.0}), 1);
  double apex0 = 0.0, apex1 = 0.0;
  e.step(env::Action::interact(0));
  env::StepResult r = e.step(env::Action::interact(1));
  for (int s = 0; s < 12; ++s) {
    apex0 = std::max(apex0, r.obs[0]);
    apex1 = std::max(apex1, r.obs[1]);
    if (s < 11) r = e.step(env::Action::interact(2));  // heavy-ish padding pokes
  }
  CHECK(apex0 > apex1);
}

TEST_CASE("no poke keeps the observation at zero") {
  heavier::HeavierEnv e;
  e.reset(5);
  // poking block 3 only; others stay grounded
  for (int s = 0; s < 10; ++s) {
    env::StepResult r = e.step(env::Action::interact(3));
    CHECK(r.obs[0] == 0.0);
    CHECK(r.obs[1] == 0.0);
    CHECK(r.obs[2] == 0.0);
  }
}

TEST_CASE("answer is the realized argmax with lowest-index tie break") {
  CHECK(heavier::answer_of(assignment_from_u({0.1, 0.9, 0.2, 0.3})) == 1);
  // sampled heavy draw can lose to a light draw
  heavier::MassAssignment m = assignment_from_u({0.55, 0.60, 0.1, 0.1});
  m.heavy_index = 0;
  CHECK(heavier::answer_of(m) == 1);
  CHECK(heavier::answer_of(assignment_from_u({0.4, 0.4, 0.4, 0.4})) == 0);
}

TEST_CASE("mass gap distributions are stochastically ordered in beta") {
  Rng rng(31);
  oracle::GapDistribution d3 = oracle::gap_cdf(3.0, 20000, rng);
  oracle::GapDistribution d5 = oracle::gap_cdf(5.0, 20000, rng);
  oracle::GapDistribution d10 = oracle::gap_cdf(10.0, 20000, rng);
  for (double x : {0.05, 0.1, 0.2, 0.4, 0.6}) {
    CHECK(d3.cdf(x) > d5.cdf(x));
    CHECK(d5.cdf(x) > d10.cdf(x));
  }
  CHECK(d3.cdf(1.0) == 1.0);
}

TEST_CASE("noiseless play: poke each block once, label the lowest apex") {
  heavier::HeavierConfig cfg;
  cfg.poke_noise_sigma = 0.0;
  heavier::HeavierEnv e(cfg);
  int correct = 0;
  constexpr int kEpisodes = 200;
  for (int ep = 0; ep < kEpisodes; ++ep) {
    e.reset(static_cast<std::uint64_t>(1000 + ep));
    // The height right after a poke from rest is strictly decreasing in
    // mass, so one poke per block identifies the heaviest.
    std::array<double, 4> response{};
    for (int b = 0; b < 4; ++b) {
      env::StepResult r = e.step(env::Action::interact(b));
      response[static_cast<std::size_t>(b)] = r.obs[static_cast<std::size_t>(b)];
    }
    int guess = 0;
    for (int b = 1; b < 4; ++b) {
      if (response[static_cast<std::size_t>(b)] < response[static_cast<std::size_t>(guess)]) guess = b;
    }
    env::StepResult fin = e.step(env::Action::label(guess));
    if (fin.reward == 1.0) ++correct;
  }
  CHECK(correct == kEpisodes);
}
