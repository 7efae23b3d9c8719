#ifndef HANDEYE_TESTS_FIXTURES_HPP
#define HANDEYE_TESTS_FIXTURES_HPP

#include <random>
#include <vector>

#include "handeye/simulate.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace handeye;

struct Problem {
  RigidTransform x;
  RigidTransform z;
  CalibrationDataset data;
};

/// Random ground truth and a noiseless dataset of n pairs.
inline Problem noiseless(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  const RigidTransform x = oracle::random_transform(rng, 300.0);
  const RigidTransform z = oracle::random_transform(rng, 900.0);
  return {x, z, generate_dataset(x, z, n, derive_seed(seed, 1))};
}

inline Problem noisy(std::uint64_t seed, std::size_t n, double rot_ratio, double trans_ratio) {
  Problem p = noiseless(seed, n);
  NoiseSpec spec;
  spec.rotation_ratio = rot_ratio;
  spec.translation_ratio = trans_ratio;
  spec.seed = derive_seed(seed, 2);
  p.data = perturb(p.data, spec);
  return p;
}

/// Noiseless dataset whose pair `index` has a half-turn camera motion, so
/// its quaternion has zero scalar part.
inline Problem with_half_turn(std::uint64_t seed, std::size_t n, std::size_t index) {
  Problem p = noiseless(seed, n);
  std::mt19937_64 rng(derive_seed(seed, 3));
  std::vector<MotionPair> pairs(p.data.begin(), p.data.end());
  const Vector3 axis = oracle::random_vector(rng, 1.0).normalized();
  const RigidTransform a{rotation_from_quat(UnitQuaternion(0.0, axis)),
                         oracle::random_vector(rng, 500.0)};
  RigidTransform b = invert(p.z) * a * p.x;
  b.rotation = rotation_from_quat(quat_from_rotation(b.rotation));
  pairs[index] = {a, b};
  p.data = CalibrationDataset(std::move(pairs));
  return p;
}

/// A_i = B_i with distinct rotation axes and zero translations; X = Z = I.
inline CalibrationDataset identity_dataset() {
  std::vector<MotionPair> pairs;
  const std::vector<std::pair<Vector3, double>> motions = {
      {Vector3(1, 0, 0), 0.6}, {Vector3(0, 1, 0), 1.1}, {Vector3(1, 1, 1), 2.0}};
  for (const auto& [axis, angle] : motions) {
    const RigidTransform t{rotation_from_quat(UnitQuaternion::from_axis_angle(axis, angle)),
                           Vector3(10.0 * angle, -5.0, 3.0)};
    pairs.push_back({t, t});
  }
  return CalibrationDataset(std::move(pairs));
}

}  // namespace fixture

#endif  // HANDEYE_TESTS_FIXTURES_HPP
