#ifndef HANDEYE_SIMULATE_HPP
#define HANDEYE_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "handeye/closed_form.hpp"
#include "handeye/errors.hpp"
#include "handeye/linear.hpp"
#include "handeye/lsq.hpp"
#include "handeye/nonlinear.hpp"
#include "handeye/se3.hpp"
#include "handeye/types.hpp"

namespace handeye {

// ============================================================================
// Synthetic data
// ============================================================================

inline constexpr double kMinMotionAngleDeg = 10.0;
inline constexpr double kMaxMotionAngleDeg = 170.0;
/// Half-width of the cube camera translations are drawn from; gives a mean
/// translation norm of about 500 mm.
inline constexpr double kTranslationHalfWidth = 520.0;

/// Counter-based seed derivation (splitmix64 finalizer over a mixed key).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0xD6E8FEB86659FD93ULL));
}

inline RigidTransform random_camera_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> angle(deg_to_rad(kMinMotionAngleDeg),
                                               deg_to_rad(kMaxMotionAngleDeg));
  std::uniform_real_distribution<double> coord(-kTranslationHalfWidth, kTranslationHalfWidth);
  Vector3 axis;
  do {
    axis = Vector3(normal(rng), normal(rng), normal(rng));
  } while (axis.norm() < 1e-6);
  const double theta = angle(rng);
  const Vector3 t(coord(rng), coord(rng), coord(rng));
  return {rotation_from_quat(UnitQuaternion::from_axis_angle(axis, theta)), t};
}

/// n random camera poses A_i with B_i = Z^-1 A_i X; deterministic per seed.
inline CalibrationDataset generate_dataset(const RigidTransform& x, const RigidTransform& z,
                                           std::size_t n, std::uint64_t seed) {
  if (n < 1) throw CalibrationError(ErrorKind::ValidationError, "n must be at least 1");
  std::mt19937_64 rng(seed);
  const RigidTransform z_inv = invert(z);
  std::vector<MotionPair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const RigidTransform a = random_camera_pose(rng);
    RigidTransform b = z_inv * a * x;
    // Store B in quaternion form like A, so both survive serialization exactly.
    b.rotation = rotation_from_quat(quat_from_rotation(b.rotation));
    pairs.push_back({a, b});
  }
  return CalibrationDataset(std::move(pairs));
}

/// sum_i (|t_Ai| + |t_Bi|) / 2n.
inline double nominal_translation(const CalibrationDataset& dataset) {
  double sum = 0.0;
  for (const MotionPair& p : dataset) sum += p.a.translation.norm() + p.b.translation.norm();
  return sum / (2.0 * static_cast<double>(dataset.size()));
}

// ============================================================================
// Noise
// ============================================================================

enum class NoiseDistribution { Uniform, Gaussian };

inline std::string_view to_string(NoiseDistribution d) {
  return d == NoiseDistribution::Uniform ? "uniform" : "gaussian";
}

/// Noise amplitudes are ratios: C for uniform draws in [-C/2, C/2], 2 sigma
/// for Gaussian draws. Quaternions have nominal magnitude 1; translations are
/// scaled by nominal_translation() of the dataset being perturbed.
struct NoiseSpec {
  NoiseDistribution distribution = NoiseDistribution::Gaussian;
  double rotation_ratio = 0.0;
  double translation_ratio = 0.0;
  std::uint64_t seed = 0;
};

/// Zero-mean draws with amplitude ratio `ratio` as described for NoiseSpec.
class NoiseSource {
 public:
  NoiseSource(NoiseDistribution dist, std::uint64_t seed) : dist_(dist), rng_(seed) {}

  double operator()(double ratio) {
    if (dist_ == NoiseDistribution::Uniform) {
      return ratio * (uniform_(rng_) - 0.5);
    }
    return 0.5 * ratio * normal_(rng_);
  }

 private:
  NoiseDistribution dist_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline CalibrationDataset perturb(const CalibrationDataset& dataset, const NoiseSpec& spec) {
  if (spec.rotation_ratio < 0.0 || spec.translation_ratio < 0.0) {
    throw CalibrationError(ErrorKind::ValidationError, "noise ratios must be nonnegative");
  }
  if (spec.rotation_ratio == 0.0 && spec.translation_ratio == 0.0) return dataset;

  NoiseSource noise(spec.distribution, spec.seed);
  const double trans_scale = spec.translation_ratio * nominal_translation(dataset);
  auto perturb_pose = [&](const RigidTransform& pose) {
    Vector4 q = quat_from_rotation(pose.rotation).coeffs();
    for (int k = 0; k < 4; ++k) q[k] += noise(spec.rotation_ratio);
    Vector3 t = pose.translation;
    for (int k = 0; k < 3; ++k) t[k] += noise(1.0) * trans_scale;
    return RigidTransform{rotation_from_quat(UnitQuaternion(q)), t};
  };

  std::vector<MotionPair> out;
  out.reserve(dataset.size());
  for (const MotionPair& p : dataset) {
    const RigidTransform a = perturb_pose(p.a);
    const RigidTransform b = perturb_pose(p.b);
    out.push_back({a, b});
  }
  return CalibrationDataset(std::move(out));
}

// ============================================================================
// Monte-Carlo sweep
// ============================================================================

inline RigidTransform default_ground_truth_x() {
  return {Rotation3::from_axis_angle(Vector3(1.0, 2.0, 3.0), deg_to_rad(40.0)),
          229.0 * Vector3(1.0, -1.0, 2.0).normalized()};
}

inline RigidTransform default_ground_truth_z() {
  return {Rotation3::from_axis_angle(Vector3(-2.0, 1.0, 1.0), deg_to_rad(75.0)),
          768.0 * Vector3(3.0, 1.0, -2.0).normalized()};
}

struct SweepConfig {
  RigidTransform x = default_ground_truth_x();
  RigidTransform z = default_ground_truth_z();
  /// Rotation noise ratios swept over.
  std::vector<double> noise_levels = {0.01, 0.02, 0.03, 0.04, 0.05, 0.06};
  std::vector<std::size_t> n_positions = {3};
  int trials = 500;
  NoiseDistribution distribution = NoiseDistribution::Gaussian;
  /// Fixed translation noise ratio, or the swept level when
  /// translation_follows_level is set.
  double translation_ratio = 0.0;
  bool translation_follows_level = false;
  std::uint64_t seed = 1;
  NlOptions nonlinear;
  unsigned threads = 1;
};

inline void validate(const SweepConfig& cfg) {
  if (cfg.trials < 1) throw CalibrationError(ErrorKind::ValidationError, "trials must be >= 1");
  if (cfg.noise_levels.empty() || cfg.n_positions.empty()) {
    throw CalibrationError(ErrorKind::ValidationError, "noise_levels and n_positions must be non-empty");
  }
  for (double l : cfg.noise_levels) {
    if (!(l >= 0.0 && l <= 0.5)) {
      throw CalibrationError(ErrorKind::ValidationError, "noise levels must lie in [0, 0.5]");
    }
  }
  if (!(cfg.translation_ratio >= 0.0 && cfg.translation_ratio <= 0.5)) {
    throw CalibrationError(ErrorKind::ValidationError, "translation_ratio must lie in [0, 0.5]");
  }
  for (std::size_t n : cfg.n_positions) {
    if (n < 1) throw CalibrationError(ErrorKind::ValidationError, "n_positions entries must be >= 1");
  }
  if (cfg.x.translation.norm() == 0.0 || cfg.z.translation.norm() == 0.0) {
    throw CalibrationError(ErrorKind::ValidationError,
                           "ground-truth translations must be nonzero (relative position error)");
  }
}

struct SweepRow {
  Method method = Method::Linear;
  NoiseDistribution distribution = NoiseDistribution::Gaussian;
  double noise_ratio = 0.0;
  std::size_t n = 0;
  double mean_orient_err_x_deg = 0.0;
  double mean_orient_err_z_deg = 0.0;
  double mean_pos_err_x = 0.0;
  double mean_pos_err_z = 0.0;
  int infeasible_count = 0;
  int solved_count = 0;
  /// Nonlinear only: trials that hit the iteration cap, and the largest
  /// pre-projection |R R^T - I|_F over X and Z among the converged ones.
  int unconverged_count = 0;
  double max_orthogonality_error = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ordered by n, level, then method
  int trials = 0;
  std::uint64_t seed = 0;

  const SweepRow* find(Method m, double level, std::size_t n) const {
    for (const SweepRow& r : rows) {
      if (r.method == m && r.noise_ratio == level && r.n == n) return &r;
    }
    return nullptr;
  }
};

struct TrialErrors {
  double orient_x = 0.0;
  double orient_z = 0.0;
  double pos_x = 0.0;
  double pos_z = 0.0;
  double orthogonality = 0.0;
  bool converged = true;
};

struct TrialOutcome {
  std::array<std::optional<TrialErrors>, 3> per_method;
};

inline std::optional<TrialErrors> evaluate_method(Method m, const CalibrationDataset& data,
                                                  const SweepConfig& cfg) {
  try {
    CalibrationSolution sol;
    switch (m) {
      case Method::Linear: sol = solve_linear(data); break;
      case Method::ClosedForm: sol = solve_closed_form(data); break;
      case Method::Nonlinear: sol = solve_nonlinear(data, cfg.nonlinear); break;
    }
    TrialErrors e;
    e.orient_x = orientation_error_deg(sol.x.rotation, cfg.x.rotation);
    e.orient_z = orientation_error_deg(sol.z.rotation, cfg.z.rotation);
    e.pos_x = position_error_rel(sol.x.translation, cfg.x.translation);
    e.pos_z = position_error_rel(sol.z.translation, cfg.z.translation);
    if (const auto* d = std::get_if<NonlinearDiagnostics>(&sol.diagnostics)) {
      e.orthogonality = std::max(d->orthogonality_error_x, d->orthogonality_error_z);
      e.converged = d->converged;
    }
    return e;
  } catch (const CalibrationError&) {
    return std::nullopt;
  }
}

/// One Monte-Carlo trial. Dataset and noise seeds depend on (seed, n, trial)
/// only, so every noise level reuses the same motions and noise directions.
inline TrialOutcome run_trial(const SweepConfig& cfg, double level, std::size_t n, int trial) {
  const auto t = static_cast<std::uint64_t>(trial);
  const CalibrationDataset clean =
      generate_dataset(cfg.x, cfg.z, n, derive_seed(cfg.seed, n, 2 * t));
  NoiseSpec spec;
  spec.distribution = cfg.distribution;
  spec.rotation_ratio = level;
  spec.translation_ratio = cfg.translation_follows_level ? level : cfg.translation_ratio;
  spec.seed = derive_seed(cfg.seed, n, 2 * t + 1);
  const CalibrationDataset noisy = perturb(clean, spec);
  TrialOutcome out;
  for (std::size_t k = 0; k < kAllMethods.size(); ++k) {
    out.per_method[k] = evaluate_method(kAllMethods[k], noisy, cfg);
  }
  return out;
}

inline SweepResult run_sweep(const SweepConfig& cfg) {
  validate(cfg);
  SweepResult result;
  result.trials = cfg.trials;
  result.seed = cfg.seed;
  const unsigned threads = std::max(1U, cfg.threads);

  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(cfg.trials));
  for (std::size_t n : cfg.n_positions) {
    for (double level : cfg.noise_levels) {
      auto worker = [&](unsigned w) {
        for (int t = static_cast<int>(w); t < cfg.trials; t += static_cast<int>(threads)) {
          outcomes[static_cast<std::size_t>(t)] = run_trial(cfg, level, n, t);
        }
      };
      if (threads == 1) {
        worker(0);
      } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
      }

      // Fixed-order reduction keeps results independent of the thread count.
      for (std::size_t k = 0; k < kAllMethods.size(); ++k) {
        SweepRow row;
        row.method = kAllMethods[k];
        row.distribution = cfg.distribution;
        row.noise_ratio = level;
        row.n = n;
        for (const TrialOutcome& o : outcomes) {
          const auto& e = o.per_method[k];
          if (!e) {
            ++row.infeasible_count;
            continue;
          }
          ++row.solved_count;
          row.mean_orient_err_x_deg += e->orient_x;
          row.mean_orient_err_z_deg += e->orient_z;
          row.mean_pos_err_x += e->pos_x;
          row.mean_pos_err_z += e->pos_z;
          if (e->converged) {
            row.max_orthogonality_error = std::max(row.max_orthogonality_error, e->orthogonality);
          } else {
            ++row.unconverged_count;
          }
        }
        if (row.solved_count > 0) {
          const double inv = 1.0 / row.solved_count;
          row.mean_orient_err_x_deg *= inv;
          row.mean_orient_err_z_deg *= inv;
          row.mean_pos_err_x *= inv;
          row.mean_pos_err_z *= inv;
        }
        result.rows.push_back(row);
      }
    }
  }
  return result;
}

}  // namespace handeye

#endif  // HANDEYE_SIMULATE_HPP
