#pragma once

#include <array>
#include <optional>
#include <vector>

namespace probe::phys {

constexpr double kGravity = 10.0;        // m/s^2
constexpr double kDefaultDt = 0.025;     // s
constexpr double kBlockEdge = 1.0;       // m
constexpr double kContactRadius = 0.5 * kBlockEdge;
constexpr double kRestHeight = 0.5 * kBlockEdge;  // resting center height
constexpr double kDamping = 0.5;         // s^-1, tower worlds only
constexpr double kFistRadius = 1.0;      // m

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const;
};

struct VerticalBlock {
  double mass = 1.0;  // kg
  double z = 0.0;     // m, height above rest
  double vz = 0.0;    // m/s
};

// Four blocks constrained to vertical motion (Which is Heavier substrate).
struct VerticalWorld {
  std::array<VerticalBlock, 4> blocks;
  double sim_time = 0.0;

  // Semi-implicit Euler with ground clamp at z = 0.
  void step(const std::array<double, 4>& applied_force, double dt);
};

struct Body3D {
  Vec3 position;  // center of mass
  Vec3 velocity;
  double mass = 1.0;
  std::vector<int> member_blocks;    // primitive block indices
  std::vector<Vec3> local_offsets;   // per member, relative to COM
};

struct Fist {
  Vec3 position;
  Vec3 commanded_velocity;  // z always 0
  double radius = kFistRadius;
};

// Translation-only rigid bodies over a ground plane, sphere contacts,
// optional kinematic fist (Towers substrate).
struct TowerWorld {
  std::vector<Body3D> bodies;
  std::optional<Fist> fist;
  double sim_time = 0.0;
  double physics_dt = kDefaultDt;

  void step(const std::vector<Vec3>& external_force, double dt);
  void set_fist_velocity(const Vec3& v);

  std::vector<Vec3> block_positions() const;  // primitive blocks, index order
  int body_of_block(int block) const;
};

// De-penetration plus inelastic normal impulses for all overlapping pairs
// (block-block across bodies, fist-block, ground-block).  Iterates to
// convergence; exactly coincident centers separate along +x.
void resolve_contacts(TowerWorld& world);

}  // namespace probe::phys
