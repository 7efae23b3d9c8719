#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "handeye/closed_form.hpp"
#include "handeye/lsq.hpp"
#include "oracles.hpp"

using namespace handeye;

namespace {

Eigen::Matrix<double, 8, 1> stack(const UnitQuaternion& qx, const UnitQuaternion& qz) {
  Eigen::Matrix<double, 8, 1> v;
  v << qx.coeffs(), qz.coeffs();
  return v;
}

}  // namespace

TEST(CMatrix, SingleIdentityPair) {
  const RigidTransform id = RigidTransform::identity();
  EXPECT_EQ(build_cmat(CalibrationDataset({{id, id}})), -Matrix4::Identity());
}

TEST(CMatrix, PerPairBlocksPreserveNorm) {
  std::mt19937_64 rng(1);
  const fixture::Problem p = fixture::noisy(1, 6, 0.05, 0.0);
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    const Matrix4 ci = build_cmat(CalibrationDataset({p.data[i]}));
    for (int k = 0; k < 10; ++k) {
      const Vector4 x = oracle::random_quaternion(rng).coeffs() * 3.7;
      EXPECT_NEAR((ci * x).norm(), x.norm(), 1e-12);
    }
  }
}

TEST(CMatrix, OperatorNormBoundedByPairCount) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const fixture::Problem p = fixture::noisy(seed, 5, 0.05, 0.0);
    const Eigen::JacobiSVD<Matrix4> svd(build_cmat(p.data));
    EXPECT_LE(svd.singularValues()[0], 5.0 + 1e-12);
  }
}

TEST(CMatrix, QuadraticFormMatchesPairResiduals) {
  // v^T S v = sum_i |q_A q_X - s_i q_Z q_B|^2, using the Hamilton-product oracle.
  std::mt19937_64 rng(2);
  const fixture::Problem p = fixture::noisy(2, 4, 0.05, 0.0);
  const std::vector<int> signs = {1, -1, -1, 1};
  const auto s = build_smat(p.data, signs);
  for (int k = 0; k < 20; ++k) {
    const UnitQuaternion qx = oracle::random_quaternion(rng);
    const UnitQuaternion qz = oracle::random_quaternion(rng);
    double want = 0.0;
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const auto l = oracle::quat_product(oracle::to_array(quat_from_rotation(p.data[i].a.rotation)),
                                          oracle::to_array(qx));
      const auto r = oracle::quat_product(oracle::to_array(qz),
                                          oracle::to_array(quat_from_rotation(p.data[i].b.rotation)));
      for (int c = 0; c < 4; ++c) want += (l[c] - signs[i] * r[c]) * (l[c] - signs[i] * r[c]);
    }
    const auto v = stack(qx, qz);
    EXPECT_NEAR(v.dot(s * v), want, 1e-12);
  }
}

TEST(ClosedForm, NoiselessRecoveryAndEigenvalues) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const fixture::Problem p = fixture::noiseless(seed, 3);
    const ClosedFormRotations r = solve_rotations_closed_form(p.data);
    EXPECT_LT(r.diagnostics.lambda, 1e-10);
    EXPECT_NEAR(r.diagnostics.eigenvalues[0], 9.0, 1e-8);
    EXPECT_NEAR(r.diagnostics.chosen_alpha, 9.0, 1e-8);
    EXPECT_LT(orientation_error_deg(rotation_from_quat(r.qx), p.x.rotation), 1e-7);
    EXPECT_LT(orientation_error_deg(rotation_from_quat(r.qz), p.z.rotation), 1e-7);
    EXPECT_TRUE(std::is_sorted(r.diagnostics.eigenvalues.rbegin(), r.diagnostics.eigenvalues.rend()));
  }
}

TEST(ClosedForm, NoiselessResiduals) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const fixture::Problem p = fixture::noiseless(seed, 4);
    const CalibrationSolution s = solve_closed_form(p.data);
    EXPECT_LT(s.residual_rotation, 1e-14);
    EXPECT_LT(s.residual_translation, 1e-10);
    EXPECT_LT(position_error_rel(s.x.translation, p.x.translation), 1e-8);
    EXPECT_LT(position_error_rel(s.z.translation, p.z.translation), 1e-8);
  }
}

TEST(ClosedForm, IdentityDataset) {
  const CalibrationDataset d = fixture::identity_dataset();
  const CalibrationSolution s = solve_closed_form(d);
  EXPECT_LT(orientation_error_deg(s.x.rotation, Rotation3()), 1e-9);
  EXPECT_LT(orientation_error_deg(s.z.rotation, Rotation3()), 1e-9);
  EXPECT_LT(std::get<ClosedFormDiagnostics>(s.diagnostics).lambda, 1e-10);
  EXPECT_LT(s.x.translation.norm(), 1e-9);
}

TEST(ClosedForm, HalfTurnCameraMotionStillRecovered) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const fixture::Problem p = fixture::with_half_turn(seed, 3, seed % 3);
    const ClosedFormRotations r = solve_rotations_closed_form(p.data);
    EXPECT_LT(orientation_error_deg(rotation_from_quat(r.qx), p.x.rotation), 1e-6);
    EXPECT_LT(orientation_error_deg(rotation_from_quat(r.qz), p.z.rotation), 1e-6);
    // The reported sign branch is the one under which the quaternion equation holds.
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const Vector4 l = (quat_from_rotation(p.data[i].a.rotation) * r.qx).coeffs();
      const Vector4 rr = (r.qz * quat_from_rotation(p.data[i].b.rotation)).coeffs();
      EXPECT_LT((l - r.diagnostics.sign_pattern[i] * rr).norm(), 1e-9);
    }
  }
}

TEST(ClosedForm, MinimumValueIsTwiceLambda) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const fixture::Problem p = fixture::noisy(seed, 3 + seed % 4, 0.04, 0.0);
    const ClosedFormRotations r = solve_rotations_closed_form(p.data);
    const auto s = build_smat(p.data, r.diagnostics.sign_pattern);
    const auto v = stack(r.qx, r.qz);
    const double n = static_cast<double>(p.data.size());
    EXPECT_NEAR(v.dot(s * v), 2.0 * r.diagnostics.lambda, 1e-9 * n);
    EXPECT_NEAR(r.diagnostics.error_value, 2.0 * r.diagnostics.lambda, 0.0);
  }
}

TEST(ClosedForm, NotBeatenByRandomUnitPairs) {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const fixture::Problem p = fixture::noisy(seed, 4, 0.06, 0.0);
    const ClosedFormRotations r = solve_rotations_closed_form(p.data);
    const auto s = build_smat(p.data, r.diagnostics.sign_pattern);
    const auto v = stack(r.qx, r.qz);
    const double best = v.dot(s * v);
    for (int k = 0; k < 10000; ++k) {
      const auto w = stack(oracle::random_quaternion(rng), oracle::random_quaternion(rng));
      ASSERT_GE(w.dot(s * w), best - 1e-9);
    }
  }
}

TEST(ClosedForm, OutputsAreUnitQuaternions) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const fixture::Problem p = fixture::noisy(seed, 5, 0.06, 0.0);
    const ClosedFormRotations r = solve_rotations_closed_form(p.data);
    EXPECT_NEAR(r.qx.coeffs().norm(), 1.0, 1e-12);
    EXPECT_NEAR(r.qz.coeffs().norm(), 1.0, 1e-12);
  }
}

TEST(ClosedForm, InvariantToPermutationAndQuaternionSigns) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const fixture::Problem p = fixture::noisy(seed, 5, 0.04, 0.0);
    const ClosedFormRotations base = solve_rotations_closed_form(p.data);

    std::vector<MotionPair> shuffled(p.data.begin(), p.data.end());
    std::mt19937_64 rng(seed);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const ClosedFormRotations perm = solve_rotations_closed_form(CalibrationDataset(shuffled));
    EXPECT_LT((base.qx.coeffs() - perm.qx.coeffs()).norm(), 1e-9);
    EXPECT_LT((base.qz.coeffs() - perm.qz.coeffs()).norm(), 1e-9);
  }
  // A half-turn camera quaternion and its negative describe the same motion.
  const fixture::Problem p = fixture::with_half_turn(5, 4, 2);
  std::vector<MotionPair> pairs(p.data.begin(), p.data.end());
  const UnitQuaternion qa = quat_from_rotation(pairs[2].a.rotation);
  pairs[2].a.rotation = Rotation3(rotation_from_quat(-qa).matrix());
  const ClosedFormRotations a = solve_rotations_closed_form(p.data);
  const ClosedFormRotations b = solve_rotations_closed_form(CalibrationDataset(pairs));
  EXPECT_LT((a.qx.coeffs() - b.qx.coeffs()).norm(), 1e-9);
  EXPECT_LT((a.qz.coeffs() - b.qz.coeffs()).norm(), 1e-9);
}

TEST(ClosedForm, SinglePairFails) {
  const fixture::Problem p = fixture::noiseless(4, 1);
  EXPECT_THROW(solve_closed_form(p.data), CalibrationError);
}

TEST(ClosedForm, ParallelAxesReportDegenerateEigenvalue) {
  const fixture::Problem base = fixture::noiseless(6, 1);
  std::vector<MotionPair> pairs;
  for (double angle : {0.4, 1.2, 2.1}) {
    const RigidTransform a{Rotation3::from_axis_angle(Vector3(0, 0, 1), angle),
                           Vector3(angle * 100, 20, -30)};
    pairs.push_back({a, invert(base.z) * a * base.x});
  }
  try {
    solve_rotations_closed_form(CalibrationDataset(pairs));
    FAIL() << "expected DegenerateEigenvalue";
  } catch (const CalibrationError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateEigenvalue);
  }
}
