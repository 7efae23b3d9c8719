#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "fixtures.hpp"
#include "handeye/linear.hpp"
#include "handeye/lsq.hpp"
#include "oracles.hpp"

using namespace handeye;

namespace {

ErrorKind error_kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const CalibrationError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no CalibrationError thrown";
  return ErrorKind::IoError;
}

}  // namespace

TEST(LinearSystem, IdentityPairBlock) {
  const RigidTransform id = RigidTransform::identity();
  const CalibrationDataset d({{id, id}});
  const LinearSystem sys = build_linear_system(d);
  ASSERT_EQ(sys.j.rows(), 3);
  ASSERT_EQ(sys.j.cols(), 6);
  EXPECT_EQ(Matrix3(sys.j.block<3, 3>(0, 0)), Matrix3::Identity());
  EXPECT_EQ(Matrix3(sys.j.block<3, 3>(0, 3)), -Matrix3::Identity());
  EXPECT_EQ(sys.rhs, Eigen::VectorXd::Zero(3));
}

TEST(LinearSystem, GroundTruthSatisfiesStackedEquations) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const fixture::Problem p = fixture::noiseless(seed, 4);
    const UnitQuaternion qx = quat_from_rotation(p.x.rotation);
    const UnitQuaternion qz = quat_from_rotation(p.z.rotation);
    // Per-pair sign that makes q_A q_X = s q_Z q_B hold with canonical quaternions.
    std::vector<int> signs;
    for (const auto& pair : p.data) {
      const Vector4 l = (quat_from_rotation(pair.a.rotation) * qx).coeffs();
      const Vector4 r = (qz * quat_from_rotation(pair.b.rotation)).coeffs();
      signs.push_back(l.dot(r) >= 0.0 ? 1 : -1);
    }
    const LinearSystem sys = build_linear_system(p.data, signs);
    Eigen::VectorXd u(6);
    u << qx.vec(), qz.vec();
    EXPECT_LT((sys.j * u - sys.rhs * qz.scalar()).cwiseAbs().maxCoeff(), 1e-12) << "seed " << seed;
  }
}

TEST(LinearSystem, HalfTurnCameraMotionIsInfeasible) {
  const fixture::Problem p = fixture::with_half_turn(4, 3, 1);
  try {
    build_linear_system(p.data);
    FAIL() << "expected InfeasibleConfiguration";
  } catch (const CalibrationError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InfeasibleConfiguration);
    ASSERT_TRUE(e.pair_index().has_value());
    EXPECT_EQ(*e.pair_index(), 1U);
  }
  EXPECT_EQ(error_kind_of([&] { solve_linear(p.data); }), ErrorKind::InfeasibleConfiguration);
}

TEST(LinearSolver, NoiselessRecovery) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const fixture::Problem p = fixture::noiseless(seed, 3);
    const CalibrationSolution s = solve_linear(p.data);
    EXPECT_LT(orientation_error_deg(s.x.rotation, p.x.rotation), 1e-7) << "seed " << seed;
    EXPECT_LT(orientation_error_deg(s.z.rotation, p.z.rotation), 1e-7) << "seed " << seed;
    EXPECT_LT(s.residual_rotation, 1e-14);
    EXPECT_LT(s.residual_translation, 1e-10);
    EXPECT_EQ(s.method, Method::Linear);
  }
}

TEST(LinearSolver, QuaternionEquationHoldsWithReportedSigns) {
  for (std::uint64_t seed = 100; seed < 150; ++seed) {
    const fixture::Problem p = fixture::noiseless(seed, 5);
    const LinearRotations r = solve_rotations_linear(p.data);
    ASSERT_EQ(r.diagnostics.sign_pattern.size(), p.data.size());
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const oracle::Arr4 lhs = oracle::quat_product(
          oracle::to_array(quat_from_rotation(p.data[i].a.rotation)), oracle::to_array(r.qx));
      const oracle::Arr4 rhs = oracle::quat_product(
          oracle::to_array(r.qz), oracle::to_array(quat_from_rotation(p.data[i].b.rotation)));
      const double s = r.diagnostics.sign_pattern[i];
      double err = 0.0;
      for (int k = 0; k < 4; ++k) err += (lhs[k] - s * rhs[k]) * (lhs[k] - s * rhs[k]);
      EXPECT_LT(std::sqrt(err), 1e-9) << "seed " << seed << " pair " << i;
    }
  }
}

TEST(LinearSolver, IdentityDataset) {
  const CalibrationSolution s = solve_linear(fixture::identity_dataset());
  EXPECT_LT(orientation_error_deg(s.x.rotation, Rotation3()), 1e-9);
  EXPECT_LT(orientation_error_deg(s.z.rotation, Rotation3()), 1e-9);
  EXPECT_LT(s.x.translation.norm(), 1e-9);
  EXPECT_LT(s.z.translation.norm(), 1e-9);
}

TEST(LinearSolver, SinglePairIsRankDeficient) {
  const fixture::Problem p = fixture::noiseless(5, 1);
  EXPECT_EQ(error_kind_of([&] { solve_linear(p.data); }), ErrorKind::RankDeficient);
}

TEST(LinearSolver, ParallelAxesAreRankDeficient) {
  const fixture::Problem base = fixture::noiseless(6, 1);
  std::vector<MotionPair> pairs;
  for (double angle : {0.4, 1.2, 2.1}) {
    const RigidTransform a{Rotation3::from_axis_angle(Vector3(0, 0, 1), angle),
                           Vector3(angle * 100, 20, -30)};
    pairs.push_back({a, invert(base.z) * a * base.x});
  }
  EXPECT_EQ(error_kind_of([&] { solve_linear(CalibrationDataset(pairs)); }),
            ErrorKind::RankDeficient);
}

TEST(LinearSolver, PermutationInvariant) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const fixture::Problem p = fixture::noisy(seed, 5, 0.03, 0.01);
    std::vector<MotionPair> shuffled(p.data.begin(), p.data.end());
    std::mt19937_64 rng(seed);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const LinearRotations a = solve_rotations_linear(p.data);
    const LinearRotations b = solve_rotations_linear(CalibrationDataset(shuffled));
    EXPECT_LT((a.qx.coeffs() - b.qx.coeffs()).norm(), 1e-9);
    EXPECT_LT((a.qz.coeffs() - b.qz.coeffs()).norm(), 1e-9);
  }
}

TEST(LinearSolver, TranslationScalingScalesTranslationsOnly) {
  const fixture::Problem p = fixture::noisy(7, 4, 0.02, 0.02);
  const double scale = 3.5;
  std::vector<MotionPair> scaled;
  for (const auto& pair : p.data) {
    MotionPair q = pair;
    q.a.translation *= scale;
    q.b.translation *= scale;
    scaled.push_back(q);
  }
  const CalibrationSolution a = solve_linear(p.data);
  const CalibrationSolution b = solve_linear(CalibrationDataset(scaled));
  EXPECT_EQ(a.x.rotation.matrix(), b.x.rotation.matrix());
  EXPECT_EQ(a.z.rotation.matrix(), b.z.rotation.matrix());
  EXPECT_LT((b.x.translation - scale * a.x.translation).norm(), 1e-9 * b.x.translation.norm());
  EXPECT_LT((b.z.translation - scale * a.z.translation).norm(), 1e-9 * b.z.translation.norm());
}

TEST(LinearSolver, ManyPairsUseRefinementPath) {
  const fixture::Problem p = fixture::noiseless(8, 16);
  const CalibrationSolution s = solve_linear(p.data);
  EXPECT_LT(orientation_error_deg(s.x.rotation, p.x.rotation), 1e-7);
  EXPECT_LT(orientation_error_deg(s.z.rotation, p.z.rotation), 1e-7);
}
