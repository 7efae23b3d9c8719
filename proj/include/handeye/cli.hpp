#ifndef HANDEYE_CLI_HPP
#define HANDEYE_CLI_HPP

#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "handeye/closed_form.hpp"
#include "handeye/errors.hpp"
#include "handeye/io.hpp"
#include "handeye/linear.hpp"
#include "handeye/nonlinear.hpp"
#include "handeye/simulate.hpp"

namespace handeye::cli {

enum ExitCode : int { kOk = 0, kSolverFailure = 1, kInputError = 2 };

inline std::string pose_text(const RigidTransform& t) {
  const UnitQuaternion q = quat_from_rotation(t.rotation);
  std::ostringstream s;
  s << std::setprecision(10) << "q=[" << q[0] << ", " << q[1] << ", " << q[2] << ", " << q[3]
    << "] t=[" << t.translation.x() << ", " << t.translation.y() << ", " << t.translation.z()
    << "] mm";
  return s.str();
}

inline CalibrationSolution solve_with(Method m, const CalibrationDataset& data,
                                      const NlOptions& nl) {
  switch (m) {
    case Method::Linear: return solve_linear(data);
    case Method::ClosedForm: return solve_closed_form(data);
    case Method::Nonlinear: return solve_nonlinear(data, nl);
  }
  return solve_closed_form(data);
}

/// Entry point shared by the executable and the tests. Returns 0 on success,
/// 1 when a solver rejects the data, 2 on usage, I/O or validation errors.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simultaneous robot-world and hand-eye calibration (AX = ZB)", "handeye"};
  app.require_subcommand(1);

  // solve
  std::string solve_method = "all";
  std::string solve_input;
  std::string solve_output;
  std::string solve_init = "closed-form";
  auto* solve = app.add_subcommand("solve", "Estimate X and Z from a dataset file");
  solve->add_option("--method", solve_method, "linear | closed-form | nonlinear | all")
      ->check(CLI::IsMember({"linear", "closed-form", "nonlinear", "all"}));
  solve->add_option("--input", solve_input, "Dataset file")->required();
  solve->add_option("--output", solve_output, "Report file (JSON)");
  solve->add_option("--initializer", solve_init, "Nonlinear initializer: linear | closed-form")
      ->check(CLI::IsMember({"linear", "closed-form"}));

  // generate
  std::size_t gen_n = 3;
  std::uint64_t gen_seed = 0;
  std::string gen_x;
  std::string gen_z;
  std::string gen_output;
  auto* generate = app.add_subcommand("generate", "Write a noiseless synthetic dataset");
  generate->add_option("--n", gen_n, "Number of positions")->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen_seed, "Random seed");
  generate->add_option("--x", gen_x, "Ground-truth X as q0,qx,qy,qz,tx,ty,tz");
  generate->add_option("--z", gen_z, "Ground-truth Z as q0,qx,qy,qz,tx,ty,tz");
  generate->add_option("--output", gen_output, "Dataset file")->required();

  // perturb
  std::string pert_input;
  std::string pert_dist = "gaussian";
  double pert_rot = 0.0;
  double pert_trans = 0.0;
  std::uint64_t pert_seed = 0;
  std::string pert_output;
  auto* perturb_cmd = app.add_subcommand("perturb", "Add noise to a dataset");
  perturb_cmd->add_option("--input", pert_input, "Dataset file")->required();
  perturb_cmd->add_option("--dist", pert_dist, "uniform | gaussian")
      ->check(CLI::IsMember({"uniform", "gaussian"}));
  perturb_cmd->add_option("--rot-ratio", pert_rot, "Rotation noise ratio")->check(CLI::NonNegativeNumber);
  perturb_cmd->add_option("--trans-ratio", pert_trans, "Translation noise ratio")
      ->check(CLI::NonNegativeNumber);
  perturb_cmd->add_option("--seed", pert_seed, "Random seed");
  perturb_cmd->add_option("--output", pert_output, "Dataset file")->required();

  // sweep
  std::string sweep_config;
  std::string sweep_output;
  unsigned sweep_threads = 0;
  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo noise sweep over all three methods");
  sweep->add_option("--config", sweep_config, "Sweep configuration (JSON); defaults if omitted");
  sweep->add_option("--output", sweep_output, "CSV output file")->required();
  sweep->add_option("--threads", sweep_threads, "Worker threads (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return kInputError;
  }

  try {
    if (*solve) {
      std::vector<std::string> warnings;
      const CalibrationDataset data = io::parse_dataset(solve_input, &warnings);
      for (const auto& w : warnings) err << "warning: " << w << '\n';

      NlOptions nl;
      nl.initializer = solve_init == "linear" ? Initializer::Linear : Initializer::ClosedForm;
      std::vector<Method> methods;
      if (solve_method == "all") {
        methods.assign(kAllMethods.begin(), kAllMethods.end());
      } else if (solve_method == "linear") {
        methods = {Method::Linear};
      } else if (solve_method == "closed-form") {
        methods = {Method::ClosedForm};
      } else {
        methods = {Method::Nonlinear};
      }

      std::vector<CalibrationSolution> solutions;
      std::vector<io::MethodFailure> failures;
      for (Method m : methods) {
        try {
          solutions.push_back(solve_with(m, data, nl));
          const CalibrationSolution& s = solutions.back();
          out << to_string(m) << ": E_R = " << io::format_number(s.residual_rotation)
              << "  E_t = " << io::format_number(s.residual_translation) << '\n'
              << "  X " << pose_text(s.x) << '\n'
              << "  Z " << pose_text(s.z) << '\n';
        } catch (const CalibrationError& e) {
          if (is_input_error(e.kind())) throw;
          err << to_string(m) << ": " << to_string(e.kind()) << ": " << e.what() << '\n';
          failures.push_back({m, e});
        }
      }
      if (!solve_output.empty()) {
        io::write_file(solve_output, io::report_to_json(solutions, failures).dump(2) + "\n");
      }
      return failures.empty() ? kOk : kSolverFailure;
    }

    if (*generate) {
      const RigidTransform x = gen_x.empty() ? default_ground_truth_x() : io::pose_from_string(gen_x);
      const RigidTransform z = gen_z.empty() ? default_ground_truth_z() : io::pose_from_string(gen_z);
      io::write_dataset(gen_output, generate_dataset(x, z, gen_n, gen_seed));
      return kOk;
    }

    if (*perturb_cmd) {
      std::vector<std::string> warnings;
      const CalibrationDataset data = io::parse_dataset(pert_input, &warnings);
      for (const auto& w : warnings) err << "warning: " << w << '\n';
      NoiseSpec spec;
      spec.distribution = io::distribution_from_string(pert_dist);
      spec.rotation_ratio = pert_rot;
      spec.translation_ratio = pert_trans;
      spec.seed = pert_seed;
      io::write_dataset(pert_output, perturb(data, spec));
      return kOk;
    }

    if (*sweep) {
      SweepConfig cfg = sweep_config.empty() ? SweepConfig{} : io::parse_sweep_config(sweep_config);
      if (sweep_threads > 0) cfg.threads = sweep_threads;
      io::write_file(sweep_output, io::sweep_to_csv(run_sweep(cfg)));
      return kOk;
    }
  } catch (const CalibrationError& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return is_input_error(e.kind()) ? kInputError : kSolverFailure;
  }
  return kInputError;
}

}  // namespace handeye::cli

#endif  // HANDEYE_CLI_HPP
