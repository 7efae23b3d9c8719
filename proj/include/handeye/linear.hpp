#ifndef HANDEYE_LINEAR_HPP
#define HANDEYE_LINEAR_HPP

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "handeye/detail/sign_search.hpp"
#include "handeye/errors.hpp"
#include "handeye/lsq.hpp"
#include "handeye/se3.hpp"
#include "handeye/types.hpp"

namespace handeye {

// Linear quaternion method for AX = ZB. Eliminating x0 from the scalar part
// of q_A * q_X = q_Z * q_B leaves, per pair, three equations linear in
// u = (x, z) with right-hand side z0 (b - (b0/a0) a). Stacking the pairs and
// fixing z0 = 1 gives an overdetermined system whose solution is rescaled by
// the unit-norm constraint on q_Z.

struct LinearSystem {
  Eigen::MatrixXd j;    // 3n x 6
  Eigen::VectorXd rhs;  // 3n, with z0 factored out
  std::vector<double> a0;
};

namespace detail {

inline void check_linear_feasible(std::span<const QuatPair> pairs) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (std::abs(pairs[i].qa.scalar()) <= kFeasibilityEpsilon) {
      throw CalibrationError(ErrorKind::InfeasibleConfiguration,
                             "camera motion " + std::to_string(i) +
                                 " is a half-turn (a0 = 0); the linear method cannot use it",
                             i);
    }
  }
}

inline LinearSystem build_linear_system(std::span<const QuatPair> pairs,
                                        std::span<const int> signs) {
  check_linear_feasible(pairs);
  const auto n = static_cast<Eigen::Index>(pairs.size());
  LinearSystem sys;
  sys.j.resize(3 * n, 6);
  sys.rhs.resize(3 * n);
  sys.a0.resize(pairs.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const QuatPair& p = pairs[static_cast<std::size_t>(i)];
    const double s = signs.empty() ? 1.0 : signs[static_cast<std::size_t>(i)];
    const double a0 = p.qa.scalar();
    const Vector3 a = p.qa.vec();
    const double b0 = s * p.qb.scalar();
    const Vector3 b = s * p.qb.vec();
    sys.j.block<3, 3>(3 * i, 0) = a0 * Matrix3::Identity() + a * a.transpose() / a0 + skew(a);
    sys.j.block<3, 3>(3 * i, 3) = -b0 * Matrix3::Identity() - a * b.transpose() / a0 + skew(b);
    sys.rhs.segment<3>(3 * i) = b - (b0 / a0) * a;
    sys.a0[static_cast<std::size_t>(i)] = a0;
  }
  return sys;
}

struct LinearCandidate {
  UnitQuaternion qx;
  UnitQuaternion qz;
  double score = 0.0;
  std::vector<double> singular_values;
  std::vector<int> signs;
};

inline LinearCandidate solve_linear_pattern(std::span<const QuatPair> pairs,
                                            std::span<const int> signs) {
  const LinearSystem sys = build_linear_system(pairs, signs);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.j, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kRankThreshold);
  if (svd.rank() < 6) {
    throw CalibrationError(ErrorKind::RankDeficient,
                           "stacked linear system has rank " + std::to_string(svd.rank()) +
                               " < 6; two motions with distinct rotation axes are required");
  }
  const Eigen::VectorXd u = svd.solve(sys.rhs);
  const Vector3 xs = u.head<3>();
  const Vector3 zs = u.tail<3>();

  const double z0 = 1.0 / std::sqrt(1.0 + zs.squaredNorm());
  if (z0 <= kFeasibilityEpsilon) {
    throw CalibrationError(ErrorKind::ZeroScalar, "recovered z0 is zero; the linear method fails");
  }
  const Vector3 z = z0 * zs;
  const Vector3 x = z0 * xs;

  // x0 from a0 x0 = a.x + b0 z0 - b.z, least squares over all pairs.
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double s = signs.empty() ? 1.0 : signs[i];
    const double a0 = pairs[i].qa.scalar();
    const double rhs = pairs[i].qa.vec().dot(x) + s * pairs[i].qb.scalar() * z0 -
                       s * pairs[i].qb.vec().dot(z);
    num += a0 * rhs;
    den += a0 * a0;
  }
  const double x0 = num / den;

  LinearCandidate c{UnitQuaternion(x0, x), UnitQuaternion(z0, z), 0.0, {}, {}};
  c.score = rotation_score(pairs, c.qx, c.qz);
  const Eigen::VectorXd sv = svd.singularValues();
  c.singular_values.assign(sv.data(), sv.data() + sv.size());
  c.signs.assign(signs.begin(), signs.end());
  return c;
}

}  // namespace detail

/// Stacked system for the dataset with every q_B taken in canonical sign.
inline LinearSystem build_linear_system(const CalibrationDataset& dataset,
                                        std::span<const int> signs = {}) {
  const auto pairs = detail::quaternion_pairs(dataset);
  return detail::build_linear_system(pairs, signs);
}

struct LinearRotations {
  UnitQuaternion qx;
  UnitQuaternion qz;
  LinearDiagnostics diagnostics;
};

inline LinearRotations solve_rotations_linear(const CalibrationDataset& dataset) {
  const auto pairs = detail::quaternion_pairs(dataset);
  detail::check_linear_feasible(pairs);
  auto best = detail::search_sign_patterns<detail::LinearCandidate>(
      pairs, [](std::span<const detail::QuatPair> p, std::span<const int> s) {
        return detail::solve_linear_pattern(p, s);
      });
  detail::canonicalize_solution(best.qx, best.qz, best.signs);
  return {best.qx, best.qz,
          LinearDiagnostics{std::move(best.singular_values), std::move(best.signs)}};
}

inline CalibrationSolution solve_linear(const CalibrationDataset& dataset) {
  LinearRotations rot = solve_rotations_linear(dataset);
  return finish_solution(dataset, rotation_from_quat(rot.qx), rotation_from_quat(rot.qz),
                         Method::Linear, std::move(rot.diagnostics));
}

}  // namespace handeye

#endif  // HANDEYE_LINEAR_HPP
