#pragma once

#include "cdr/csv.hpp"
#include "cdr/fem.hpp"
#include "cdr/pinn.hpp"
#include "cdr/trainer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cdr {

enum class Scale { paper, desk };

Scale parse_scale(const std::string& name);
std::string to_string(Scale scale);

struct FemSettings {
  int n = 64;  // elements per direction
  double dt = 0.01;
  int n_steps = 100;
  std::vector<Mode> modes;
};

/// Everything needed to run one example end to end.
struct ExamplePreset {
  std::string id;
  Scale scale = Scale::paper;
  std::optional<double> reynolds;  // ex4 only
  ProblemSpec problem;
  FemSettings fem;
  NetworkConfig network;
  TrainPlan plan;

  std::shared_ptr<const Mesh> build_mesh() const;
  TimeGrid time_grid() const;
  StabilizationConfig stabilization(Mode mode) const;
};

/// Per-example settings. Desk scale halves the mesh per direction, caps the
/// run at 1500 epochs (phase boundaries scaled with it) and uses Re = 1e3 for ex4.
ExamplePreset example_preset(const std::string& id, Scale scale = Scale::paper, std::uint64_t seed = 0);

/// Applies `key = value` overrides from the global section and then from the
/// section named after the example. Repeated `phase = start end w_data w_pde w_bc`
/// lines replace the whole phase table.
void apply_overrides(ExamplePreset& preset, const Config& config);

/// Current settings as an override file that apply_overrides reads back.
Config to_config(const ExamplePreset& preset);

}  // namespace cdr
