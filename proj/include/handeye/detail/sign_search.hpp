#ifndef HANDEYE_DETAIL_SIGN_SEARCH_HPP
#define HANDEYE_DETAIL_SIGN_SEARCH_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "handeye/errors.hpp"
#include "handeye/se3.hpp"
#include "handeye/types.hpp"

namespace handeye {

/// Threshold on |a0| (and on the recovered |z0|) below which a quaternion is
/// treated as purely imaginary.
inline constexpr double kFeasibilityEpsilon = 1e-6;

/// Pairs with index < kExhaustiveSignPairs get every relative sign tried;
/// later pairs are assigned by alternating refinement.
inline constexpr std::size_t kExhaustiveSignPairs = 12;

namespace detail {

struct QuatPair {
  UnitQuaternion qa;
  UnitQuaternion qb;
};

inline std::vector<QuatPair> quaternion_pairs(const CalibrationDataset& dataset) {
  std::vector<QuatPair> out;
  out.reserve(dataset.size());
  for (const MotionPair& p : dataset) {
    out.push_back({quat_from_rotation(p.a.rotation), quat_from_rotation(p.b.rotation)});
  }
  return out;
}

/// <q_A * q_X, q_Z * q_B>; its sign is the relative sign of q_B that makes
/// q_A * q_X = s q_Z * q_B hold best.
inline double pair_alignment(const QuatPair& p, const UnitQuaternion& qx, const UnitQuaternion& qz) {
  return (qmat(p.qa) * qx.coeffs()).dot(wmat(p.qb) * qz.coeffs());
}

/// Sign-free rotation residual: sum_i 8 (1 - c_i^2) equals E_R.
inline double rotation_score(std::span<const QuatPair> pairs, const UnitQuaternion& qx,
                             const UnitQuaternion& qz) {
  double sum = 0.0;
  for (const QuatPair& p : pairs) {
    const double c = pair_alignment(p, qx, qz);
    sum += 8.0 * (1.0 - c * c);
  }
  return sum;
}

inline std::vector<int> signs_from_solution(std::span<const QuatPair> pairs,
                                            const UnitQuaternion& qx, const UnitQuaternion& qz) {
  std::vector<int> signs(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    signs[i] = pair_alignment(pairs[i], qx, qz) >= 0.0 ? 1 : -1;
  }
  if (!signs.empty() && signs[0] < 0) {
    for (int& s : signs) s = -s;
  }
  return signs;
}

/// Canonicalizes q_X and q_Z independently. When exactly one of them flips,
/// every relative sign flips too, so q_A q_X = s_i q_Z q_B keeps holding.
inline void canonicalize_solution(UnitQuaternion& qx, UnitQuaternion& qz, std::vector<int>& signs) {
  const bool flip_x = !qx.is_canonical();
  const bool flip_z = !qz.is_canonical();
  qx = qx.canonical();
  qz = qz.canonical();
  if (flip_x != flip_z) {
    for (int& s : signs) s = -s;
  }
}

/**
 * Runs `solve(pairs, signs)` over relative sign patterns of the q_B and keeps
 * the candidate with the lowest `score`.
 *
 * q and -q are the same rotation, so each equation q_A q_X = q_Z q_B only
 * holds up to a per-pair sign. The first pair's sign is fixed at +1 (a global
 * flip maps solutions onto their negatives). With n <= kExhaustiveSignPairs
 * all 2^(n-1) patterns are tried. Otherwise the first kExhaustiveSignPairs are
 * searched exhaustively and the full pattern is completed by alternating
 * between solving and re-deriving signs, which never increases the score.
 *
 * `solve` returns a Candidate exposing `score`, `qx`, `qz` and may throw
 * CalibrationError for patterns it cannot handle; if no pattern succeeds the
 * first such error is rethrown.
 */
template <class Candidate, class Solve>
Candidate search_sign_patterns(std::span<const QuatPair> pairs, Solve&& solve) {
  const std::size_t n = pairs.size();
  const std::size_t m = n < kExhaustiveSignPairs ? n : kExhaustiveSignPairs;
  std::optional<Candidate> best;
  std::optional<CalibrationError> first_error;

  auto try_pattern = [&](std::span<const QuatPair> subset, const std::vector<int>& signs) {
    try {
      Candidate c = solve(subset, std::span<const int>(signs));
      if (!best || c.score < best->score) best = std::move(c);
    } catch (const CalibrationError& e) {
      if (!first_error) first_error = e;
    }
  };

  const std::span<const QuatPair> head = pairs.first(m);
  std::vector<int> signs(m, 1);
  const std::size_t patterns = std::size_t{1} << (m > 0 ? m - 1 : 0);
  for (std::size_t bits = 0; bits < patterns; ++bits) {
    for (std::size_t i = 1; i < m; ++i) signs[i] = ((bits >> (i - 1)) & 1U) ? -1 : 1;
    try_pattern(head, signs);
  }
  if (m == n || !best) {
    if (!best) throw *first_error;
    return std::move(*best);
  }

  std::vector<int> current = signs_from_solution(pairs, best->qx, best->qz);
  best.reset();
  for (int iter = 0; iter < 64; ++iter) {
    const std::optional<Candidate> previous = best;
    try_pattern(pairs, current);
    if (!best || (previous && !(best->score < previous->score))) break;
    std::vector<int> next = signs_from_solution(pairs, best->qx, best->qz);
    if (next == current) break;
    current = std::move(next);
  }
  if (!best) throw *first_error;
  return std::move(*best);
}

}  // namespace detail
}  // namespace handeye

#endif  // HANDEYE_DETAIL_SIGN_SEARCH_HPP
