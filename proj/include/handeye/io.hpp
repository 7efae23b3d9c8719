#ifndef HANDEYE_IO_HPP
#define HANDEYE_IO_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "handeye/errors.hpp"
#include "handeye/se3.hpp"
#include "handeye/simulate.hpp"
#include "handeye/types.hpp"
#include "json.hpp"

namespace handeye::io {

using Json = nlohmann::json;

inline constexpr std::string_view kDatasetFormat = "handeye-dataset";
inline constexpr std::string_view kReportFormat = "handeye-report";
inline constexpr int kFormatVersion = 1;

/// Quaternions within this distance of unit norm are accepted silently.
inline constexpr double kUnitTolerance = 1e-6;
/// Up to this distance they are renormalized with a warning; beyond, rejected.
inline constexpr double kRenormalizeTolerance = 1e-3;

inline constexpr std::string_view kSweepCsvHeader =
    "method,distribution,noise_ratio,n,mean_orient_err_X_deg,mean_orient_err_Z_deg,"
    "mean_pos_err_X,mean_pos_err_Z,infeasible_count";

// ----------------------------------------------------------------------------
// Poses
// ----------------------------------------------------------------------------

inline Json pose_to_json(const RigidTransform& t) {
  const UnitQuaternion q = quat_from_rotation(t.rotation);
  return Json{{"quaternion", {q[0], q[1], q[2], q[3]}},
              {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& where, const std::string& what) {
  throw CalibrationError(ErrorKind::ParseError, where + ": " + what);
}

template <std::size_t N>
std::array<double, N> number_array(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != N) {
    parse_fail(where, "expected an array of " + std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!j[i].is_number()) parse_fail(where, "element " + std::to_string(i) + " is not a number");
    out[i] = j[i].get<double>();
    if (!std::isfinite(out[i])) parse_fail(where, "non-finite value");
  }
  return out;
}

inline const Json& member(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) parse_fail(where, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) parse_fail(where, std::string("missing field '") + key + "'");
  return *it;
}

inline UnitQuaternion checked_quaternion(const std::array<double, 4>& q, const std::string& where,
                                         std::vector<std::string>* warnings) {
  const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  const double dev = std::abs(norm - 1.0);
  if (dev > kRenormalizeTolerance) {
    throw CalibrationError(ErrorKind::ValidationError,
                           where + ": quaternion norm " + std::to_string(norm) + " is not unit");
  }
  if (dev > kUnitTolerance && warnings != nullptr) {
    warnings->push_back(where + ": quaternion norm " + std::to_string(norm) + " renormalized");
  }
  return UnitQuaternion(q[0], q[1], q[2], q[3]);
}

}  // namespace detail

inline RigidTransform pose_from_json(const Json& j, const std::string& where,
                                     std::vector<std::string>* warnings = nullptr) {
  const auto q = detail::number_array<4>(detail::member(j, "quaternion", where), where + ".quaternion");
  const auto t = detail::number_array<3>(detail::member(j, "translation", where), where + ".translation");
  return {rotation_from_quat(detail::checked_quaternion(q, where + ".quaternion", warnings)),
          Vector3(t[0], t[1], t[2])};
}

/// "q0,qx,qy,qz,tx,ty,tz" as used on the command line.
inline RigidTransform pose_from_string(std::string_view text) {
  std::vector<double> v;
  std::string token;
  std::istringstream in{std::string(text)};
  while (std::getline(in, token, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      detail::parse_fail("pose", "'" + token + "' is not a number");
    }
  }
  if (v.size() != 7) detail::parse_fail("pose", "expected 7 comma-separated numbers q0,qx,qy,qz,tx,ty,tz");
  const UnitQuaternion q = detail::checked_quaternion({v[0], v[1], v[2], v[3]}, "pose", nullptr);
  return {rotation_from_quat(q), Vector3(v[4], v[5], v[6])};
}

// ----------------------------------------------------------------------------
// Files
// ----------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CalibrationError(ErrorKind::IoError, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CalibrationError(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw CalibrationError(ErrorKind::IoError, "failed writing '" + path + "'");
}

inline Json parse_json(std::string_view text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw CalibrationError(ErrorKind::ParseError, source + ": " + e.what());
  }
}

// ----------------------------------------------------------------------------
// Dataset
// ----------------------------------------------------------------------------

inline Json dataset_to_json(const CalibrationDataset& dataset) {
  Json pairs = Json::array();
  for (const MotionPair& p : dataset) {
    pairs.push_back({{"A", pose_to_json(p.a)}, {"B", pose_to_json(p.b)}});
  }
  return Json{{"format", kDatasetFormat},
              {"version", kFormatVersion},
              {"units", "mm"},
              {"pairs", std::move(pairs)}};
}

inline std::string serialize_dataset(const CalibrationDataset& dataset) {
  return dataset_to_json(dataset).dump(2) + "\n";
}

inline CalibrationDataset dataset_from_json(const Json& j,
                                            std::vector<std::string>* warnings = nullptr) {
  const std::string root = "dataset";
  const Json& format = detail::member(j, "format", root);
  if (!format.is_string() || format.get<std::string>() != kDatasetFormat) {
    throw CalibrationError(ErrorKind::ValidationError,
                           "format must be \"" + std::string(kDatasetFormat) + "\"");
  }
  const Json& version = detail::member(j, "version", root);
  if (!version.is_number_integer() || version.get<int>() != kFormatVersion) {
    throw CalibrationError(ErrorKind::ValidationError,
                           "unsupported dataset version (expected " +
                               std::to_string(kFormatVersion) + ")");
  }
  const Json& units = detail::member(j, "units", root);
  if (!units.is_string() || units.get<std::string>() != "mm") {
    throw CalibrationError(ErrorKind::ValidationError, "units must be \"mm\"");
  }
  const Json& pairs = detail::member(j, "pairs", root);
  if (!pairs.is_array()) detail::parse_fail("dataset.pairs", "expected an array");
  if (pairs.empty()) {
    throw CalibrationError(ErrorKind::ValidationError, "dataset.pairs: at least one pair is required");
  }
  std::vector<MotionPair> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string where = "pairs[" + std::to_string(i) + "]";
    out.push_back({pose_from_json(detail::member(pairs[i], "A", where), where + ".A", warnings),
                   pose_from_json(detail::member(pairs[i], "B", where), where + ".B", warnings)});
  }
  return CalibrationDataset(std::move(out));
}

inline CalibrationDataset parse_dataset_text(std::string_view text,
                                             std::vector<std::string>* warnings = nullptr) {
  return dataset_from_json(parse_json(text, "dataset"), warnings);
}

inline CalibrationDataset parse_dataset(const std::string& path,
                                        std::vector<std::string>* warnings = nullptr) {
  return dataset_from_json(parse_json(read_file(path), path), warnings);
}

inline void write_dataset(const std::string& path, const CalibrationDataset& dataset) {
  write_file(path, serialize_dataset(dataset));
}

// ----------------------------------------------------------------------------
// Solution report
// ----------------------------------------------------------------------------

inline Json diagnostics_to_json(const Diagnostics& diag) {
  return std::visit(
      [](const auto& d) -> Json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, LinearDiagnostics>) {
          return {{"singular_values", d.singular_values}, {"sign_pattern", d.sign_pattern}};
        } else if constexpr (std::is_same_v<T, ClosedFormDiagnostics>) {
          return {{"eigenvalues", d.eigenvalues},
                  {"chosen_alpha", d.chosen_alpha},
                  {"lambda", d.lambda},
                  {"error_value", d.error_value},
                  {"sign_pattern", d.sign_pattern}};
        } else {
          return {{"iterations", d.iterations},
                  {"initial_cost", d.initial_cost},
                  {"final_cost", d.final_cost},
                  {"converged", d.converged},
                  {"orthogonality_error_x", d.orthogonality_error_x},
                  {"orthogonality_error_z", d.orthogonality_error_z}};
        }
      },
      diag);
}

inline Json solution_to_json(const CalibrationSolution& sol) {
  return Json{{"method", to_string(sol.method)},
              {"X", pose_to_json(sol.x)},
              {"Z", pose_to_json(sol.z)},
              {"residual_rotation", sol.residual_rotation},
              {"residual_translation", sol.residual_translation},
              {"diagnostics", diagnostics_to_json(sol.diagnostics)}};
}

struct MethodFailure {
  Method method;
  CalibrationError error;
};

inline Json report_to_json(const std::vector<CalibrationSolution>& solutions,
                           const std::vector<MethodFailure>& failures) {
  Json sols = Json::array();
  for (const auto& s : solutions) sols.push_back(solution_to_json(s));
  Json errs = Json::array();
  for (const auto& f : failures) {
    errs.push_back({{"method", to_string(f.method)},
                    {"kind", to_string(f.error.kind())},
                    {"message", f.error.what()}});
  }
  return Json{{"format", kReportFormat},
              {"version", kFormatVersion},
              {"units", "mm"},
              {"solutions", std::move(sols)},
              {"errors", std::move(errs)}};
}

// ----------------------------------------------------------------------------
// Sweep configuration and CSV
// ----------------------------------------------------------------------------

inline NoiseDistribution distribution_from_string(std::string_view s) {
  if (s == "uniform") return NoiseDistribution::Uniform;
  if (s == "gaussian") return NoiseDistribution::Gaussian;
  throw CalibrationError(ErrorKind::ValidationError,
                         "distribution must be \"uniform\" or \"gaussian\", got \"" +
                             std::string(s) + "\"");
}

/// Every key is optional; missing keys keep the SweepConfig defaults.
inline SweepConfig sweep_config_from_json(const Json& j) {
  if (!j.is_object()) detail::parse_fail("sweep config", "expected an object");
  SweepConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "trials") {
        cfg.trials = value.get<int>();
      } else if (key == "noise_levels") {
        cfg.noise_levels = value.get<std::vector<double>>();
      } else if (key == "n_positions") {
        cfg.n_positions = value.get<std::vector<std::size_t>>();
      } else if (key == "distribution") {
        cfg.distribution = distribution_from_string(value.get<std::string>());
      } else if (key == "translation_ratio") {
        cfg.translation_ratio = value.get<double>();
      } else if (key == "translation_follows_level") {
        cfg.translation_follows_level = value.get<bool>();
      } else if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "threads") {
        cfg.threads = value.get<unsigned>();
      } else if (key == "x") {
        cfg.x = pose_from_json(value, "x");
      } else if (key == "z") {
        cfg.z = pose_from_json(value, "z");
      } else if (key == "nonlinear") {
        for (const auto& [k, v] : value.items()) {
          if (k == "mu1") cfg.nonlinear.mu1 = v.get<double>();
          else if (k == "mu2") cfg.nonlinear.mu2 = v.get<double>();
          else if (k == "mu3") cfg.nonlinear.mu3 = v.get<double>();
          else if (k == "mu4") cfg.nonlinear.mu4 = v.get<double>();
          else if (k == "translation_residual_scale") cfg.nonlinear.translation_residual_scale = v.get<double>();
          else if (k == "max_iterations") cfg.nonlinear.max_iterations = v.get<int>();
          else throw CalibrationError(ErrorKind::ValidationError, "unknown nonlinear option '" + k + "'");
        }
      } else {
        throw CalibrationError(ErrorKind::ValidationError, "unknown sweep config key '" + key + "'");
      }
    }
  } catch (const Json::exception& e) {
    detail::parse_fail("sweep config", e.what());
  }
  validate(cfg);
  return cfg;
}

inline SweepConfig parse_sweep_config(const std::string& path) {
  return sweep_config_from_json(parse_json(read_file(path), path));
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string sweep_to_csv(const SweepResult& result) {
  std::string out(kSweepCsvHeader);
  out += '\n';
  for (const SweepRow& r : result.rows) {
    out += std::string(to_string(r.method)) + ',' + std::string(to_string(r.distribution)) + ',' +
           format_number(r.noise_ratio) + ',' + std::to_string(r.n) + ',' +
           format_number(r.mean_orient_err_x_deg) + ',' + format_number(r.mean_orient_err_z_deg) +
           ',' + format_number(r.mean_pos_err_x) + ',' + format_number(r.mean_pos_err_z) + ',' +
           std::to_string(r.infeasible_count) + '\n';
  }
  return out;
}

}  // namespace handeye::io

#endif  // HANDEYE_IO_HPP
