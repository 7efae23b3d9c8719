#ifndef HANDEYE_NONLINEAR_HPP
#define HANDEYE_NONLINEAR_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>

#include "handeye/closed_form.hpp"
#include "handeye/errors.hpp"
#include "handeye/linear.hpp"
#include "handeye/lsq.hpp"
#include "handeye/se3.hpp"
#include "handeye/types.hpp"

namespace handeye {

// Simultaneous estimation of R_X, R_Z, t_X, t_Z by Levenberg-Marquardt on
//
//   f = mu1 sum_i |R_Ai R_X - R_Z R_Bi|^2 + mu2 sum_i |R_Ai t_X + t_Ai - R_Z t_Bi - t_Z|^2
//       + mu3 |R_X R_X^T - I|^2 + mu4 |R_Z R_Z^T - I|^2
//
// with the rotations kept as unconstrained 3x3 matrices. The last two terms
// are penalties pulling them back onto SO(3).

/// 24 unknowns: R_X (row-major), R_Z (row-major), t_X, t_Z.
class NlParams {
 public:
  using Vector = Eigen::Matrix<double, 24, 1>;

  static constexpr int kRx = 0;
  static constexpr int kRz = 9;
  static constexpr int kTx = 18;
  static constexpr int kTz = 21;

  NlParams() : v_(Vector::Zero()) {}
  explicit NlParams(const Vector& v) : v_(v) {}

  NlParams(const Matrix3& rx, const Matrix3& rz, const Vector3& tx, const Vector3& tz) {
    set_block(kRx, rx);
    set_block(kRz, rz);
    v_.segment<3>(kTx) = tx;
    v_.segment<3>(kTz) = tz;
  }

  static NlParams from_transforms(const RigidTransform& x, const RigidTransform& z) {
    return {x.rotation.matrix(), z.rotation.matrix(), x.translation, z.translation};
  }

  Matrix3 rx() const { return block(kRx); }
  Matrix3 rz() const { return block(kRz); }
  Vector3 tx() const { return v_.segment<3>(kTx); }
  Vector3 tz() const { return v_.segment<3>(kTz); }

  const Vector& vector() const { return v_; }
  Vector& vector() { return v_; }

 private:
  Matrix3 block(int offset) const {
    Matrix3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = v_[offset + 3 * r + c];
    return m;
  }
  void set_block(int offset, const Matrix3& m) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) v_[offset + 3 * r + c] = m(r, c);
  }

  Vector v_;
};

enum class Initializer { Linear, ClosedForm, Explicit };

struct NlOptions {
  double mu1 = 1.0;
  double mu2 = 1.0;
  double mu3 = 1e6;
  double mu4 = 1e6;
  /// Translation residuals enter the cost multiplied by this factor. The
  /// default expresses them in meters (parameters stay in millimeters); with
  /// millimeters the 1e6 penalties cannot hold R R^T = I to better than ~1e-3.
  double translation_residual_scale = 1e-3;
  int max_iterations = 10000;
  double cost_tolerance = 1e-14;  // relative decrease of an accepted step
  double step_tolerance = 1e-12;  // relative to |p|
  Initializer initializer = Initializer::ClosedForm;
  std::optional<RigidTransform> initial_x;  // used with Initializer::Explicit
  std::optional<RigidTransform> initial_z;
};

inline Eigen::Index nl_residual_count(const CalibrationDataset& dataset) {
  return static_cast<Eigen::Index>(12 * dataset.size() + 18);
}

/// Residual vector whose half squared norm is f / 2; layout per pair i is
/// 9 rotation entries then 3 translation entries, followed by the two 3x3
/// penalty blocks.
inline Eigen::VectorXd residuals(const NlParams& p, const CalibrationDataset& dataset,
                                 const NlOptions& opts) {
  const double w1 = std::sqrt(opts.mu1);
  const double w2 = std::sqrt(opts.mu2) * opts.translation_residual_scale;
  const double w3 = std::sqrt(opts.mu3), w4 = std::sqrt(opts.mu4);
  const Matrix3 rx = p.rx(), rz = p.rz();
  const Vector3 tx = p.tx(), tz = p.tz();
  Eigen::VectorXd r(nl_residual_count(dataset));
  Eigen::Index row = 0;
  for (const MotionPair& pair : dataset) {
    const Matrix3& ra = pair.a.rotation.matrix();
    const Matrix3& rb = pair.b.rotation.matrix();
    const Matrix3 e = ra * rx - rz * rb;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r[row++] = w1 * e(i, j);
    const Vector3 et = ra * tx + pair.a.translation - rz * pair.b.translation - tz;
    for (int i = 0; i < 3; ++i) r[row++] = w2 * et[i];
  }
  const Matrix3 px = rx * rx.transpose() - Matrix3::Identity();
  const Matrix3 pz = rz * rz.transpose() - Matrix3::Identity();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[row++] = w3 * px(i, j);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[row++] = w4 * pz(i, j);
  return r;
}

inline double nl_cost(const Eigen::VectorXd& r) { return 0.5 * r.squaredNorm(); }

/// Analytic Jacobian of residuals() with respect to the 24 parameters.
inline Eigen::MatrixXd jacobian(const NlParams& p, const CalibrationDataset& dataset,
                                const NlOptions& opts) {
  const double w1 = std::sqrt(opts.mu1);
  const double w2 = std::sqrt(opts.mu2) * opts.translation_residual_scale;
  const double w3 = std::sqrt(opts.mu3), w4 = std::sqrt(opts.mu4);
  const Matrix3 rx = p.rx(), rz = p.rz();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(nl_residual_count(dataset), 24);
  Eigen::Index base = 0;
  for (const MotionPair& pair : dataset) {
    const Matrix3& ra = pair.a.rotation.matrix();
    const Matrix3& rb = pair.b.rotation.matrix();
    const Vector3& tb = pair.b.translation;
    // (R_A R_X)_{rc} = sum_k A_rk X_kc ; (R_Z R_B)_{rc} = sum_k Z_rk B_kc
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        const Eigen::Index row = base + 3 * r + c;
        for (int k = 0; k < 3; ++k) {
          jac(row, NlParams::kRx + 3 * k + c) = w1 * ra(r, k);
          jac(row, NlParams::kRz + 3 * r + k) = -w1 * rb(k, c);
        }
      }
    }
    for (int r = 0; r < 3; ++r) {
      const Eigen::Index row = base + 9 + r;
      for (int k = 0; k < 3; ++k) {
        jac(row, NlParams::kTx + k) = w2 * ra(r, k);
        jac(row, NlParams::kRz + 3 * r + k) = -w2 * tb[k];
      }
      jac(row, NlParams::kTz + r) = -w2;
    }
    base += 12;
  }
  // (R R^T)_{rc} = sum_j R_rj R_cj
  auto penalty = [&](const Matrix3& m, int col0, double w) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        const Eigen::Index row = base + 3 * r + c;
        for (int j = 0; j < 3; ++j) {
          jac(row, col0 + 3 * r + j) += w * m(c, j);
          jac(row, col0 + 3 * c + j) += w * m(r, j);
        }
      }
    }
    base += 9;
  };
  penalty(rx, NlParams::kRx, w3);
  penalty(rz, NlParams::kRz, w4);
  return jac;
}

/// Nearest rotation in the Frobenius sense (orthogonal polar factor).
/// Throws ImproperRotation when det(m) <= 0.
inline Rotation3 project_to_rotation(const Matrix3& m) {
  if (!(m.determinant() > 0.0)) {
    throw CalibrationError(ErrorKind::ImproperRotation,
                           "estimated rotation block has non-positive determinant");
  }
  Eigen::JacobiSVD<Matrix3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 d = Matrix3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() > 0.0 ? 1.0 : -1.0;
  return Rotation3(svd.matrixU() * d * svd.matrixV().transpose());
}

struct LmResult {
  NlParams params;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  std::vector<double> accepted_costs;  // cost after each accepted step, initial cost first
};

/// Levenberg-Marquardt from `start`. Damping starts at 1e-3 max diag(J^T J)
/// and is divided by 10 on an accepted step, multiplied by 10 on a rejected one.
inline LmResult minimize_lm(const NlParams& start, const CalibrationDataset& dataset,
                            const NlOptions& opts) {
  using Matrix24 = Eigen::Matrix<double, 24, 24>;
  using Vector24 = NlParams::Vector;

  LmResult out;
  NlParams p = start;
  Eigen::VectorXd r = residuals(p, dataset, opts);
  double cost = nl_cost(r);
  out.initial_cost = cost;
  out.accepted_costs.push_back(cost);

  Eigen::MatrixXd jac = jacobian(p, dataset, opts);
  Matrix24 jtj = jac.transpose() * jac;
  Vector24 g = jac.transpose() * r;
  double damping = 1e-3 * jtj.diagonal().maxCoeff();

  while (out.iterations < opts.max_iterations) {
    ++out.iterations;
    if (cost == 0.0) {
      out.converged = true;
      break;
    }
    Matrix24 lhs = jtj;
    lhs.diagonal().array() += damping;
    const Vector24 step = lhs.ldlt().solve(-g);
    if (!step.allFinite()) break;
    if (step.norm() <= opts.step_tolerance * (p.vector().norm() + opts.step_tolerance)) {
      out.converged = true;
      break;
    }
    const NlParams trial(p.vector() + step);
    const Eigen::VectorXd r_trial = residuals(trial, dataset, opts);
    const double cost_trial = nl_cost(r_trial);
    if (cost_trial < cost) {
      const double rel = (cost - cost_trial) / cost;
      p = trial;
      r = r_trial;
      cost = cost_trial;
      out.accepted_costs.push_back(cost);
      damping /= 10.0;
      jac = jacobian(p, dataset, opts);
      jtj = jac.transpose() * jac;
      g = jac.transpose() * r;
      if (rel <= opts.cost_tolerance) {
        out.converged = true;
        break;
      }
    } else {
      damping *= 10.0;
    }
  }
  out.params = p;
  out.final_cost = cost;
  return out;
}

inline CalibrationSolution solve_nonlinear(const CalibrationDataset& dataset,
                                           const NlOptions& opts = {}) {
  RigidTransform x0, z0;
  try {
    switch (opts.initializer) {
      case Initializer::Linear: {
        const CalibrationSolution init = solve_linear(dataset);
        x0 = init.x;
        z0 = init.z;
        break;
      }
      case Initializer::ClosedForm: {
        const CalibrationSolution init = solve_closed_form(dataset);
        x0 = init.x;
        z0 = init.z;
        break;
      }
      case Initializer::Explicit:
        if (!opts.initial_x || !opts.initial_z) {
          throw CalibrationError(ErrorKind::InitializationFailed,
                                 "explicit initializer requires initial_x and initial_z");
        }
        x0 = *opts.initial_x;
        z0 = *opts.initial_z;
        break;
    }
  } catch (const CalibrationError& e) {
    if (e.kind() == ErrorKind::InitializationFailed) throw;
    throw CalibrationError(ErrorKind::InitializationFailed, e.what(), e.pair_index());
  }

  const LmResult lm = minimize_lm(NlParams::from_transforms(x0, z0), dataset, opts);
  const Matrix3 rx = lm.params.rx();
  const Matrix3 rz = lm.params.rz();

  NonlinearDiagnostics diag;
  diag.iterations = lm.iterations;
  diag.initial_cost = lm.initial_cost;
  diag.final_cost = lm.final_cost;
  diag.converged = lm.converged;
  diag.orthogonality_error_x = (rx * rx.transpose() - Matrix3::Identity()).norm();
  diag.orthogonality_error_z = (rz * rz.transpose() - Matrix3::Identity()).norm();

  return finish_solution(dataset, project_to_rotation(rx), project_to_rotation(rz),
                         Method::Nonlinear, diag);
}

}  // namespace handeye

#endif  // HANDEYE_NONLINEAR_HPP
