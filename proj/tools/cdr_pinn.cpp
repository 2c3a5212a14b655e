// Command-line front end: FEM solves, PINN training, end-to-end runs and report printing.

#include "cdr/harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

struct Common {
  std::string example;
  std::string scale = "paper";
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--scale", c.scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  app->add_option("--seed", c.seed, "seed for every random draw");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--config", c.config, "override file (key = value)")->check(CLI::ExistingFile);
}

cdr::RunOptions options_from(const Common& c) {
  cdr::RunOptions o;
  o.scale = cdr::parse_scale(c.scale);
  o.seed = c.seed;
  o.out_dir = c.out;
  if (!c.config.empty()) o.overrides = cdr::Config::load(c.config);
  o.log = &std::cerr;
  return o;
}

void print_fem_summary(const cdr::ExamplePreset& p, cdr::Mode mode, const cdr::SnapshotSeries& s) {
  const Eigen::VectorXd& u = s.values.back();
  std::cout << cdr::to_string(mode) << ": t_f = " << s.times.back() << ", min " << u.minCoeff() << ", max "
            << u.maxCoeff();
  if (p.problem.exact) {
    std::cout << ", L2 " << cdr::l2_error(*s.mesh, u, *p.problem.exact, s.times.back()) << ", nodal RMS "
              << cdr::nodal_rms_error(*s.mesh, u, *p.problem.exact, s.times.back());
  }
  std::cout << '\n';
}

int solve_fem_cmd(const Common& c, const std::string& mode_name) {
  const cdr::RunOptions o = options_from(c);
  const cdr::ExamplePreset p = cdr::resolve_preset(c.example, o);
  std::vector<cdr::Mode> modes = p.fem.modes;
  if (!mode_name.empty()) modes = {cdr::parse_mode(mode_name)};
  const auto mesh = p.build_mesh();
  for (cdr::Mode m : modes) {
    const cdr::SnapshotSeries s = cdr::solve_fem(p.problem, mesh, p.stabilization(m), p.time_grid());
    print_fem_summary(p, m, s);
    if (!c.out.empty()) {
      const std::string dir = mode_name.empty() ? c.out + "/fem_" + cdr::to_string(m) : c.out;
      cdr::write_snapshots(s, dir);
      std::cout << "  snapshots written to " << dir << '\n';
    }
  }
  return 0;
}

int train_cmd(const Common& c, const std::string& snapshots) {
  cdr::RunOptions o = options_from(c);
  const cdr::ExamplePreset p = cdr::resolve_preset(c.example, o);
  const cdr::SnapshotSeries s = cdr::read_snapshots(snapshots);
  if (s.mesh->dim != p.problem.dim) throw std::invalid_argument("snapshot dimension does not match " + p.id);
  const cdr::PinnOutcome out = cdr::train_on_snapshots(p, s, o);
  const cdr::MethodReport& m = out.metrics;
  std::cout << "pinn: best epoch " << out.training.best_epoch << ", loss " << out.training.best_loss << ", min "
            << m.min << ", max " << m.max;
  if (p.problem.exact) std::cout << ", L2 " << m.l2 << ", nodal RMS " << m.l2_nodal;
  std::cout << "\ntraining " << out.train_seconds << " s, evaluation " << out.eval_seconds << " s\n";
  if (!c.out.empty()) {
    std::filesystem::create_directories(c.out);
    cdr::write_loss_history(c.out + "/loss_history.csv", out.training.history);
    cdr::save_checkpoint(c.out + "/pinn_best.txt", p.network, out.training.params);
    std::cout << "loss history and checkpoint written to " << c.out << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stabilized FEM and PINN post-processing for transient convection-diffusion-reaction problems"};
  app.require_subcommand(1);

  Common fem_opts;
  std::string mode;
  auto* fem = app.add_subcommand("solve-fem", "run the finite element solver");
  fem->add_option("--example", fem_opts.example, "ex1..ex5")->required();
  fem->add_option("--mode", mode, "galerkin, supg or supg-yzb (default: every mode of the example)");
  add_common(fem, fem_opts);

  Common train_opts;
  std::string snapshots;
  auto* train = app.add_subcommand("train-pinn", "train the network on stored snapshots");
  train->add_option("--example", train_opts.example, "ex1..ex5")->required();
  train->add_option("--snapshots", snapshots, "directory written by solve-fem")->required();
  add_common(train, train_opts);

  Common run_opts;
  double epoch_factor = 1.0;
  auto* run = app.add_subcommand("run-example", "FEM, training, metrics and CSV output");
  run->add_option("example", run_opts.example, "ex1..ex5")->required();
  run->add_option("--epoch-factor", epoch_factor, "scales the epoch budget; 0 skips training");
  add_common(run, run_opts);

  std::string in_dir;
  auto* report = app.add_subcommand("report", "print a stored run report");
  report->add_option("--in", in_dir, "directory written by run-example")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*fem) return solve_fem_cmd(fem_opts, mode);
    if (*train) return train_cmd(train_opts, snapshots);
    if (*run) {
      cdr::RunOptions o = options_from(run_opts);
      o.epoch_factor = epoch_factor;
      std::cout << cdr::format_report(cdr::run_example(run_opts.example, o));
      return 0;
    }
    if (*report) {
      std::cout << cdr::format_report(cdr::read_report(in_dir));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
