#include <doctest.h>

#include <cmath>
#include <cstring>

#include "probe/physics.hpp"
#include "probe/rng.hpp"
#include "probe/towers.hpp"

using namespace probe;
using phys::Vec3;

namespace {

// Closed-form apex of a block poked from rest: force applied over the poke
// window, then ballistic flight.
double analytic_apex(double mass, double force, double poke_seconds) {
  double a = force / mass - phys::kGravity;
  if (a <= 0.0) return 0.0;
  double v = a * poke_seconds;
  double z = 0.5 * a * poke_seconds * poke_seconds;
  return z + v * v / (2.0 * phys::kGravity);
}

double simulate_apex(double mass, double force) {
  phys::VerticalWorld w;
  w.blocks[0].mass = mass;
  std::array<double, 4> poke{force, 0, 0, 0};
  std::array<double, 4> none{};
  double apex = 0.0;
  for (int s = 0; s < 4; ++s) {
    w.step(poke, phys::kDefaultDt);
    apex = std::max(apex, w.blocks[0].z);
  }
  for (int s = 0; s < 200; ++s) {
    w.step(none, phys::kDefaultDt);
    apex = std::max(apex, w.blocks[0].z);
  }
  return apex;
}

phys::TowerWorld make_tower(const towers::TowerPartition& p, bool with_fist) {
  towers::TowersConfig cfg;
  cfg.actuator = with_fist ? towers::Actuator::Fist : towers::Actuator::Direct;
  towers::TowersEnv env(cfg);
  env.reset_with(p);
  return env.world();
}

towers::TowerPartition partition_of(std::initializer_list<int> lens) {
  towers::TowerPartition p;
  int start = 0;
  for (int len : lens) {
    p.segments.emplace_back(start, len);
    start += len;
  }
  p.k = static_cast<int>(p.segments.size());
  return p;
}

}  // namespace

TEST_CASE("vertical step: one semi-implicit Euler step by hand") {
  phys::VerticalWorld w;
  w.blocks[0].mass = 1.0;
  w.step({20.0, 0, 0, 0}, 0.025);
  CHECK(w.blocks[0].vz == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(w.blocks[0].z == doctest::Approx(0.00625).epsilon(1e-12));
}

TEST_CASE("vertical step: F/m equal to g never lifts off") {
  phys::VerticalWorld w;
  w.blocks[0].mass = 2.0;
  for (int s = 0; s < 100; ++s) w.step({20.0, 0, 0, 0}, 0.025);
  CHECK(w.blocks[0].z == 0.0);
  CHECK(w.blocks[0].vz == 0.0);
}

TEST_CASE("vertical step: lighter block reaches a strictly higher apex") {
  double light = simulate_apex(0.5, 20.0);
  double heavy = simulate_apex(1.5, 20.0);
  CHECK(light > heavy);
  // Close to the closed-form ballistic apex, up to discretization error.
  CHECK(light == doctest::Approx(analytic_apex(0.5, 20.0, 0.1)).epsilon(0.15));
  CHECK(heavy == doctest::Approx(analytic_apex(1.5, 20.0, 0.1)).epsilon(0.35));
  CHECK(analytic_apex(0.5, 20.0, 0.1) > analytic_apex(1.5, 20.0, 0.1));
}

TEST_CASE("vertical apex is strictly decreasing in mass up to F/g") {
  double prev = 1e9;
  for (double mass : {0.6, 0.9, 1.2, 1.5, 1.8}) {
    double apex = simulate_apex(mass, 20.0);
    CHECK(apex < prev);
    prev = apex;
  }
}

TEST_CASE("vertical step rejects corrupt input") {
  phys::VerticalWorld w;
  CHECK_THROWS(w.step({std::nan(""), 0, 0, 0}, 0.025));
  CHECK_THROWS(w.step({0, 0, 0, 0}, 0.0));
}

TEST_CASE("static stacked tower does not drift") {
  for (auto p : {partition_of({5}), partition_of({1, 1, 1, 1, 1}),
                 partition_of({2, 3}), partition_of({1, 2, 2})}) {
    phys::TowerWorld w = make_tower(p, false);
    std::vector<Vec3> start = w.block_positions();
    std::vector<Vec3> none(w.bodies.size());
    for (int s = 0; s < 104; ++s) w.step(none, phys::kDefaultDt);
    std::vector<Vec3> end = w.block_positions();
    for (std::size_t i = 0; i < start.size(); ++i) {
      CHECK((end[i] - start[i]).norm() < 1e-6);
    }
  }
}

TEST_CASE("free body: velocity change is exactly F/m * dt") {
  phys::TowerWorld w;
  phys::Body3D b;
  b.mass = 2.0;
  b.position = {0, 0, 10.0};
  b.member_blocks = {0};
  b.local_offsets = {{0, 0, 0}};
  w.bodies.push_back(b);
  w.step({{6.0, 0, 0}}, phys::kDefaultDt);
  CHECK(w.bodies[0].velocity.x == doctest::Approx(6.0 / 2.0 * 0.025).epsilon(1e-14));
}

TEST_CASE("head-on inelastic contact zeroes relative normal velocity") {
  phys::TowerWorld w;
  for (int i = 0; i < 2; ++i) {
    phys::Body3D b;
    b.mass = 1.0;
    b.position = {i == 0 ? 0.0 : 0.99, 0, 5.0};
    b.velocity = {i == 0 ? 1.0 : -1.0, 0, 0};
    b.member_blocks = {i};
    b.local_offsets = {{0, 0, 0}};
    w.bodies.push_back(b);
  }
  phys::resolve_contacts(w);
  Vec3 n = w.bodies[1].position - w.bodies[0].position;
  n = n * (1.0 / n.norm());
  double rel = (w.bodies[1].velocity - w.bodies[0].velocity).dot(n);
  CHECK(rel == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("separated spheres are untouched by contact resolution") {
  phys::TowerWorld w;
  for (int i = 0; i < 2; ++i) {
    phys::Body3D b;
    b.position = {i * 3.0, 0, 5.0};
    b.member_blocks = {i};
    b.local_offsets = {{0, 0, 0}};
    w.bodies.push_back(b);
  }
  phys::TowerWorld before = w;
  phys::resolve_contacts(w);
  for (int i = 0; i < 2; ++i) {
    CHECK((w.bodies[i].position - before.bodies[i].position).norm() == 0.0);
    CHECK((w.bodies[i].velocity - before.bodies[i].velocity).norm() == 0.0);
  }
}

TEST_CASE("fist pushes a resting block to its own normal velocity") {
  phys::TowerWorld w;
  phys::Body3D b;
  b.position = {0, 0, 5.0};
  b.member_blocks = {0};
  b.local_offsets = {{0, 0, 0}};
  w.bodies.push_back(b);
  phys::Fist fist;
  fist.position = {-1.4, 0, 5.0};  // overlapping
  fist.commanded_velocity = {2.0, 0, 0};
  w.fist = fist;
  phys::resolve_contacts(w);
  CHECK(w.bodies[0].velocity.x == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(w.fist->position.x == doctest::Approx(-1.4).epsilon(1e-12));
}

TEST_CASE("coincident centers separate along +x") {
  phys::TowerWorld w;
  for (int i = 0; i < 2; ++i) {
    phys::Body3D b;
    b.position = {0, 0, 5.0};
    b.member_blocks = {i};
    b.local_offsets = {{0, 0, 0}};
    w.bodies.push_back(b);
  }
  phys::resolve_contacts(w);
  CHECK(w.bodies[1].position.x > w.bodies[0].position.x);
  CHECK(w.bodies[0].position.y == 0.0);
  CHECK(w.bodies[1].position.y == 0.0);
}

TEST_CASE("fist velocity contract") {
  phys::TowerWorld w = make_tower(partition_of({5}), true);
  CHECK_THROWS(w.set_fist_velocity({0, 0, 1.0}));

  SUBCASE("set velocity advances fist by v*dt per substep") {
    w.set_fist_velocity({1.0, 0, 0});
    double x0 = w.fist->position.x;
    w.step(std::vector<Vec3>(w.bodies.size()), phys::kDefaultDt);
    CHECK(w.fist->position.x == doctest::Approx(x0 + 0.025).epsilon(1e-12));
  }

  SUBCASE("zero velocity leaves fist and tower untouched") {
    w.set_fist_velocity({0, 0, 0});
    std::vector<Vec3> start = w.block_positions();
    Vec3 fist0 = w.fist->position;
    for (int s = 0; s < 104; ++s) w.step(std::vector<Vec3>(w.bodies.size()), phys::kDefaultDt);
    CHECK((w.fist->position - fist0).norm() == 0.0);
    for (std::size_t i = 0; i < start.size(); ++i) {
      CHECK((w.block_positions()[i] - start[i]).norm() < 1e-6);
    }
  }

  SUBCASE("driving through the tower displaces at least one body") {
    w.set_fist_velocity({2.0, 0, 0});
    std::vector<Vec3> start = w.block_positions();
    for (int s = 0; s < 26 * 4; ++s) w.step(std::vector<Vec3>(w.bodies.size()), phys::kDefaultDt);
    double max_disp = 0.0;
    for (std::size_t i = 0; i < start.size(); ++i) {
      max_disp = std::max(max_disp, (w.block_positions()[i] - start[i]).norm());
    }
    CHECK(max_disp > 0.1);
  }
}

TEST_CASE("tower trajectories are bitwise deterministic") {
  auto run = [] {
    phys::TowerWorld w = make_tower(partition_of({1, 2, 2}), true);
    w.set_fist_velocity({2.0, 0.0, 0});
    for (int s = 0; s < 80; ++s) w.step(std::vector<Vec3>(w.bodies.size()), phys::kDefaultDt);
    return w.block_positions();
  };
  std::vector<Vec3> a = run();
  std::vector<Vec3> b = run();
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::memcmp(&a[i], &b[i], sizeof(Vec3)) == 0);
  }
}

TEST_CASE("ground constraint and compound rigidity hold under random pokes") {
  Rng rng(7);
  phys::TowerWorld w = make_tower(partition_of({2, 1, 2}), false);
  std::vector<std::vector<Vec3>> offsets;
  for (const auto& b : w.bodies) offsets.push_back(b.local_offsets);
  for (int s = 0; s < 300; ++s) {
    std::vector<Vec3> f(w.bodies.size());
    std::size_t target = static_cast<std::size_t>(rng.uniform_int(3));
    f[target] = {rng.uniform(-30, 30), rng.uniform(-30, 30), 0};
    w.step(f, phys::kDefaultDt);
    for (const Vec3& p : w.block_positions()) {
      CHECK(p.z >= phys::kRestHeight - 1e-9);
    }
    for (std::size_t i = 0; i < w.bodies.size(); ++i) {
      for (std::size_t m = 0; m < offsets[i].size(); ++m) {
        CHECK((w.bodies[i].local_offsets[m] - offsets[i][m]).norm() == 0.0);
      }
    }
  }
}
