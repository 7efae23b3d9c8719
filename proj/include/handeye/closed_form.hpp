#ifndef HANDEYE_CLOSED_FORM_HPP
#define HANDEYE_CLOSED_FORM_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "handeye/detail/sign_search.hpp"
#include "handeye/errors.hpp"
#include "handeye/lsq.hpp"
#include "handeye/se3.hpp"
#include "handeye/types.hpp"

namespace handeye {

// Closed-form method for AX = ZB.
//
// Each pair contributes |Q(q_Ai) q_X - W(q_Bi) q_Z|^2 = v^T S_i v with
// v = (q_X, q_Z) and S_i = [I C_i; C_i^T I], C_i = -Q(q_Ai)^T W(q_Bi).
// Minimizing v^T S v under |q_X| = |q_Z| = 1 with multipliers l1 = l2 = l
// makes q_Z an eigenvector of C^T C with eigenvalue alpha = (l - n)^2,
// q_X = C q_Z / (l - n), and the minimum value equals 2 l.

inline constexpr double kLambdaRoundoff = 1e-9;
inline constexpr double kEigenGapTolerance = 1e-8;

/// C = sum_i s_i C_i. An empty `signs` means all +1.
inline Matrix4 build_cmat(const CalibrationDataset& dataset, std::span<const int> signs = {}) {
  Matrix4 c = Matrix4::Zero();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const double s = signs.empty() ? 1.0 : signs[i];
    const UnitQuaternion qa = quat_from_rotation(dataset[i].a.rotation);
    const UnitQuaternion qb = quat_from_rotation(dataset[i].b.rotation);
    c -= s * qmat(qa).transpose() * wmat(qb);
  }
  return c;
}

/// The 8x8 quadratic form S = [nI C; C^T nI] for the given sign pattern.
inline Eigen::Matrix<double, 8, 8> build_smat(const CalibrationDataset& dataset,
                                              std::span<const int> signs = {}) {
  const double n = static_cast<double>(dataset.size());
  Eigen::Matrix<double, 8, 8> s;
  const Matrix4 c = build_cmat(dataset, signs);
  s.topLeftCorner<4, 4>() = n * Matrix4::Identity();
  s.bottomRightCorner<4, 4>() = n * Matrix4::Identity();
  s.topRightCorner<4, 4>() = c;
  s.bottomLeftCorner<4, 4>() = c.transpose();
  return s;
}

namespace detail {

struct ClosedFormCandidate {
  UnitQuaternion qx;
  UnitQuaternion qz;
  double score = 0.0;  // lambda
  Matrix4 c = Matrix4::Zero();
  ClosedFormDiagnostics diag;
  int chosen_index = 0;  // into diag.eigenvalues
};

inline ClosedFormCandidate solve_closed_form_pattern(std::span<const QuatPair> pairs,
                                                     std::span<const int> signs) {
  const double n = static_cast<double>(pairs.size());
  Matrix4 c = Matrix4::Zero();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    c -= static_cast<double>(signs[i]) * qmat(pairs[i].qa).transpose() * wmat(pairs[i].qb);
  }
  const Eigen::SelfAdjointEigenSolver<Matrix4> eig(c.transpose() * c);
  // Eigen sorts ascending; report descending.
  ClosedFormCandidate out;
  out.c = c;
  for (int k = 0; k < 4; ++k) out.diag.eigenvalues[k] = eig.eigenvalues()[3 - k];

  // Smallest admissible lambda = n -/+ sqrt(alpha) over all eigenvalues.
  double best_lambda = 0.0;
  int best_k = -1;
  double best_sign = -1.0;
  for (int k = 0; k < 4; ++k) {
    const double root = std::sqrt(std::max(0.0, out.diag.eigenvalues[k]));
    for (const double sign : {-1.0, 1.0}) {
      double lambda = n + sign * root;
      if (lambda <= -kLambdaRoundoff) continue;
      if (lambda < 0.0) lambda = 0.0;
      if (best_k < 0 || lambda < best_lambda) {
        best_lambda = lambda;
        best_k = k;
        best_sign = sign;
      }
    }
  }

  const Vector4 qz = eig.eigenvectors().col(3 - best_k);
  const double root = std::sqrt(std::max(0.0, out.diag.eigenvalues[best_k]));
  if (!(root > 0.0)) {
    throw CalibrationError(ErrorKind::RankDeficientC, "C vanishes for this sign pattern");
  }
  // (lambda - n) = sign * sqrt(alpha); using it directly avoids dividing by a
  // rounded lambda - n.
  const Vector4 qx = (c * qz) / (best_sign * root);
  out.qx = UnitQuaternion(qx);
  out.qz = UnitQuaternion(qz);
  out.score = best_lambda;
  out.chosen_index = best_k;
  out.diag.chosen_alpha = out.diag.eigenvalues[best_k];
  out.diag.lambda = best_lambda;
  out.diag.error_value = 2.0 * best_lambda;
  out.diag.sign_pattern.assign(signs.begin(), signs.end());
  return out;
}

}  // namespace detail

struct ClosedFormRotations {
  UnitQuaternion qx;
  UnitQuaternion qz;
  ClosedFormDiagnostics diagnostics;
};

inline ClosedFormRotations solve_rotations_closed_form(const CalibrationDataset& dataset) {
  const auto pairs = detail::quaternion_pairs(dataset);
  auto best = detail::search_sign_patterns<detail::ClosedFormCandidate>(
      pairs, [](std::span<const detail::QuatPair> p, std::span<const int> s) {
        return detail::solve_closed_form_pattern(p, s);
      });

  const auto& ev = best.diag.eigenvalues;
  const double scale = std::max(ev[0], 1e-300);
  if (std::sqrt(std::max(0.0, ev[3]) / scale) <= kRankThreshold) {
    throw CalibrationError(ErrorKind::RankDeficientC, "C is rank deficient");
  }
  const double chosen = ev[best.chosen_index];
  for (int k = 0; k < 4; ++k) {
    if (k != best.chosen_index && std::abs(ev[k] - chosen) <= kEigenGapTolerance * scale) {
      throw CalibrationError(ErrorKind::DegenerateEigenvalue,
                             "selected eigenvalue of C^T C is repeated; the rotations are not "
                             "unique (parallel rotation axes?)");
    }
  }
  detail::canonicalize_solution(best.qx, best.qz, best.diag.sign_pattern);
  return {best.qx, best.qz, std::move(best.diag)};
}

inline CalibrationSolution solve_closed_form(const CalibrationDataset& dataset) {
  ClosedFormRotations rot = solve_rotations_closed_form(dataset);
  return finish_solution(dataset, rotation_from_quat(rot.qx), rotation_from_quat(rot.qz),
                         Method::ClosedForm, std::move(rot.diagnostics));
}

}  // namespace handeye

#endif  // HANDEYE_CLOSED_FORM_HPP
