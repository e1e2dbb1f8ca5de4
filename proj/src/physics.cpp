#include "probe/physics.hpp"

#include <cmath>
#include <stdexcept>

namespace probe::phys {

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

namespace {

bool finite(double v) { return std::isfinite(v); }
bool finite(const Vec3& v) { return finite(v.x) && finite(v.y) && finite(v.z); }

}  // namespace

void VerticalWorld::step(const std::array<double, 4>& applied_force, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    VerticalBlock& b = blocks[i];
    double f = applied_force[i];
    if (!finite(f) || !finite(b.z) || !finite(b.vz)) {
      throw std::runtime_error("vertical world corrupt: non-finite state");
    }
    if (f < 0.0) throw std::invalid_argument("forces must be non-negative");
    b.vz += (f / b.mass - kGravity) * dt;
    b.z += b.vz * dt;
    if (b.z <= 0.0) {
      b.z = 0.0;
      b.vz = 0.0;
    }
  }
  sim_time += dt;
}

void TowerWorld::set_fist_velocity(const Vec3& v) {
  if (!fist.has_value()) throw std::logic_error("no fist in this world");
  if (v.z != 0.0) throw std::invalid_argument("fist velocity must be horizontal");
  fist->commanded_velocity = v;
}

std::vector<Vec3> TowerWorld::block_positions() const {
  std::size_t n = 0;
  for (const Body3D& b : bodies) n += b.member_blocks.size();
  std::vector<Vec3> out(n);
  for (const Body3D& b : bodies) {
    for (std::size_t m = 0; m < b.member_blocks.size(); ++m) {
      out[static_cast<std::size_t>(b.member_blocks[m])] =
          b.position + b.local_offsets[m];
    }
  }
  return out;
}

int TowerWorld::body_of_block(int block) const {
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    for (int m : bodies[i].member_blocks) {
      if (m == block) return static_cast<int>(i);
    }
  }
  throw std::out_of_range("block index not in any body");
}

void TowerWorld::step(const std::vector<Vec3>& external_force, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (external_force.size() != bodies.size()) {
    throw std::invalid_argument("one external force per body required");
  }
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    Body3D& b = bodies[i];
    if (!finite(b.position) || !finite(b.velocity) || !finite(external_force[i])) {
      throw std::runtime_error("tower world corrupt: non-finite state");
    }
    // Damping applies to the incoming velocity; accelerations enter undamped.
    b.velocity = b.velocity * (1.0 - kDamping * dt);
    b.velocity.x += external_force[i].x / b.mass * dt;
    b.velocity.y += external_force[i].y / b.mass * dt;
    b.velocity.z += (external_force[i].z / b.mass - kGravity) * dt;
    b.position += b.velocity * dt;
  }
  if (fist.has_value()) {
    fist->position += fist->commanded_velocity * dt;
  }
  resolve_contacts(*this);
  sim_time += dt;
}

namespace {

// Positional correction plus inelastic impulse for one sphere pair.
// Returns the positional correction applied.
double resolve_pair(Body3D& a, const Vec3& pa, Body3D& b, const Vec3& pb,
                    double contact_dist) {
  Vec3 d = pb - pa;
  double dist = d.norm();
  if (dist >= contact_dist) return 0.0;
  Vec3 n = dist > 1e-12 ? d * (1.0 / dist) : Vec3{1.0, 0.0, 0.0};
  double pen = contact_dist - dist;
  double wa = 1.0 / a.mass;
  double wb = 1.0 / b.mass;
  double wsum = wa + wb;
  a.position -= n * (pen * wa / wsum);
  b.position += n * (pen * wb / wsum);
  double vn = (b.velocity - a.velocity).dot(n);
  if (vn < 0.0) {
    double j = -vn / wsum;
    a.velocity -= n * (j * wa);
    b.velocity += n * (j * wb);
  }
  return pen;
}

double resolve_fist_block(const Fist& fist, Body3D& b, const Vec3& pb) {
  Vec3 d = pb - fist.position;
  double dist = d.norm();
  double contact_dist = fist.radius + kContactRadius;
  if (dist >= contact_dist) return 0.0;
  Vec3 n = dist > 1e-12 ? d * (1.0 / dist) : Vec3{1.0, 0.0, 0.0};
  double pen = contact_dist - dist;
  b.position += n * pen;  // fist has infinite mass
  double vn = (b.velocity - fist.commanded_velocity).dot(n);
  if (vn < 0.0) b.velocity -= n * vn;
  return pen;
}

double resolve_ground(Body3D& b) {
  double worst = 0.0;
  for (std::size_t m = 0; m < b.member_blocks.size(); ++m) {
    double z = b.position.z + b.local_offsets[m].z;
    double deficit = kRestHeight - z;
    if (deficit > 0.0) {
      b.position.z += deficit;
      if (b.velocity.z < 0.0) b.velocity.z = 0.0;
      if (deficit > worst) worst = deficit;
    }
  }
  return worst;
}

}  // namespace

void resolve_contacts(TowerWorld& world) {
  constexpr int kMaxIters = 400;
  constexpr double kTol = 1e-14;
  auto& bodies = world.bodies;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    double worst = 0.0;
    for (Body3D& b : bodies) worst = std::max(worst, resolve_ground(b));
    for (std::size_t i = 0; i < bodies.size(); ++i) {
      for (std::size_t j = i + 1; j < bodies.size(); ++j) {
        for (std::size_t mi = 0; mi < bodies[i].member_blocks.size(); ++mi) {
          for (std::size_t mj = 0; mj < bodies[j].member_blocks.size(); ++mj) {
            Vec3 pi = bodies[i].position + bodies[i].local_offsets[mi];
            Vec3 pj = bodies[j].position + bodies[j].local_offsets[mj];
            worst = std::max(
                worst, resolve_pair(bodies[i], pi, bodies[j], pj,
                                    2.0 * kContactRadius));
          }
        }
      }
    }
    if (world.fist.has_value()) {
      for (Body3D& b : bodies) {
        for (std::size_t m = 0; m < b.member_blocks.size(); ++m) {
          Vec3 p = b.position + b.local_offsets[m];
          worst = std::max(worst, resolve_fist_block(*world.fist, b, p));
        }
      }
    }
    if (worst < kTol) break;
  }
}

}  // namespace probe::phys
