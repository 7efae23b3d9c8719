#ifndef HANDEYE_TYPES_HPP
#define HANDEYE_TYPES_HPP

#include <array>
#include <cstddef>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "handeye/errors.hpp"
#include "handeye/se3.hpp"

namespace handeye {

/// One observation: camera pose A_i and gripper pose B_i, with A_i X = Z B_i.
struct MotionPair {
  RigidTransform a;
  RigidTransform b;
};

class CalibrationDataset {
 public:
  explicit CalibrationDataset(std::vector<MotionPair> pairs) : pairs_(std::move(pairs)) {
    if (pairs_.empty()) {
      throw CalibrationError(ErrorKind::ValidationError, "dataset must contain at least one pair");
    }
  }

  std::size_t size() const { return pairs_.size(); }
  const MotionPair& operator[](std::size_t i) const { return pairs_[i]; }
  const std::vector<MotionPair>& pairs() const { return pairs_; }
  auto begin() const { return pairs_.begin(); }
  auto end() const { return pairs_.end(); }

 private:
  std::vector<MotionPair> pairs_;
};

enum class Method { Linear, ClosedForm, Nonlinear };

inline constexpr std::array<Method, 3> kAllMethods = {Method::Linear, Method::ClosedForm,
                                                       Method::Nonlinear};

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Linear: return "linear";
    case Method::ClosedForm: return "closed-form";
    case Method::Nonlinear: return "nonlinear";
  }
  return "unknown";
}

struct LinearDiagnostics {
  std::vector<double> singular_values;  // of the stacked 3n x 6 system, descending
  std::vector<int> sign_pattern;        // s_i with q_A q_X = s_i q_Z q_B (canonical quaternions)
};

struct ClosedFormDiagnostics {
  std::array<double, 4> eigenvalues{};  // of C^T C, descending
  double chosen_alpha = 0.0;
  double lambda = 0.0;       // common Lagrange multiplier, n - sqrt(alpha)
  double error_value = 0.0;  // f = 2 * lambda
  std::vector<int> sign_pattern;
};

struct NonlinearDiagnostics {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  // ||R R^T - I||_F of the raw iterate, before projection onto SO(3).
  double orthogonality_error_x = 0.0;
  double orthogonality_error_z = 0.0;
};

using Diagnostics = std::variant<LinearDiagnostics, ClosedFormDiagnostics, NonlinearDiagnostics>;

struct CalibrationSolution {
  RigidTransform x;
  RigidTransform z;
  Method method = Method::ClosedForm;
  double residual_rotation = 0.0;     // E_R
  double residual_translation = 0.0;  // E_t
  Diagnostics diagnostics;
};

}  // namespace handeye

#endif  // HANDEYE_TYPES_HPP
