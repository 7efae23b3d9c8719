#ifndef HANDEYE_LSQ_HPP
#define HANDEYE_LSQ_HPP

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "handeye/errors.hpp"
#include "handeye/se3.hpp"
#include "handeye/types.hpp"

namespace handeye {

/// Relative singular-value threshold used for every rank decision.
inline constexpr double kRankThreshold = 1e-10;

/// Least-squares translations for fixed rotations:
///   min sum_i |R_Ai t_X + t_Ai - R_Z t_Bi - t_Z|^2
/// Throws RankDeficient when the stacked [R_Ai | -I] system has rank < 6.
inline std::pair<Vector3, Vector3> solve_translations(const CalibrationDataset& dataset,
                                                      [[maybe_unused]] const Rotation3& rx,
                                                      const Rotation3& rz) {
  const auto n = static_cast<Eigen::Index>(dataset.size());
  Eigen::MatrixXd m(3 * n, 6);
  Eigen::VectorXd rhs(3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const MotionPair& p = dataset[static_cast<std::size_t>(i)];
    m.block<3, 3>(3 * i, 0) = p.a.rotation.matrix();
    m.block<3, 3>(3 * i, 3) = -Matrix3::Identity();
    rhs.segment<3>(3 * i) = rz * p.b.translation - p.a.translation;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kRankThreshold);
  if (svd.rank() < 6) {
    throw CalibrationError(ErrorKind::RankDeficient,
                           "translation system has rank " + std::to_string(svd.rank()) +
                               " < 6; at least two motions with distinct rotations are required");
  }
  const Eigen::VectorXd t = svd.solve(rhs);
  return {t.head<3>(), t.tail<3>()};
}

/// E_R = sum_i ||R_Ai R_X - R_Z R_Bi||_F^2.
inline double residual_E_R(const CalibrationDataset& dataset, const RigidTransform& x,
                           const RigidTransform& z) {
  double sum = 0.0;
  for (const MotionPair& p : dataset) {
    sum += (p.a.rotation.matrix() * x.rotation.matrix() -
            z.rotation.matrix() * p.b.rotation.matrix())
               .squaredNorm();
  }
  return sum;
}

/// E_t = sqrt( sum_i |R_Ai t_X + t_Ai - R_Z t_Bi - t_Z|^2 / sum_i |R_Ai t_X + t_Ai|^2 ).
inline double residual_E_t(const CalibrationDataset& dataset, const RigidTransform& x,
                           const RigidTransform& z) {
  double num = 0.0;
  double den = 0.0;
  for (const MotionPair& p : dataset) {
    const Vector3 lhs = p.a.rotation * x.translation + p.a.translation;
    num += (lhs - z.rotation * p.b.translation - z.translation).squaredNorm();
    den += lhs.squaredNorm();
  }
  if (!(den > 0.0)) {
    throw CalibrationError(ErrorKind::ZeroDenominator, "all R_A t_X + t_A vanish");
  }
  return std::sqrt(num / den);
}

/// Angle in degrees of the rotation taking R_true onto R_est, in [0, 180].
inline double orientation_error_deg(const Rotation3& r_est, const Rotation3& r_true) {
  return rad_to_deg(rotation_angle(r_true.transpose() * r_est));
}

/// |t_est - t_true| / |t_true|.
inline double position_error_rel(const Vector3& t_est, const Vector3& t_true) {
  const double den = t_true.norm();
  if (!(den > 0.0)) {
    throw CalibrationError(ErrorKind::ZeroDenominator, "true translation has zero norm");
  }
  return (t_est - t_true).norm() / den;
}

/// Fills in translations and residuals for a solution whose rotations are set.
inline CalibrationSolution finish_solution(const CalibrationDataset& dataset, const Rotation3& rx,
                                           const Rotation3& rz, Method method,
                                           Diagnostics diagnostics) {
  CalibrationSolution sol;
  sol.method = method;
  sol.x.rotation = rx;
  sol.z.rotation = rz;
  std::tie(sol.x.translation, sol.z.translation) = solve_translations(dataset, rx, rz);
  sol.residual_rotation = residual_E_R(dataset, sol.x, sol.z);
  sol.residual_translation = residual_E_t(dataset, sol.x, sol.z);
  sol.diagnostics = std::move(diagnostics);
  return sol;
}

}  // namespace handeye

#endif  // HANDEYE_LSQ_HPP
