#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cisim/grid.hpp"
#include "cisim/model.hpp"
#include "cisim/operators.hpp"
#include "cisim/spectra.hpp"

namespace cisim {

struct GridConfig {
  int nx = 193;
  int ny = 193;
  std::optional<double> padding;  // default: default_padding()
  double energy_cap = 20.0;
  int offset_sign = +1;
  CiPlacement ci_placement = CiPlacement::CellCentre;
  // Explicit extents replace the padding rule when all four are set.
  std::optional<double> x_min, x_max, y_min, y_max;
  int order = 4;
  GpScheme gp_scheme = GpScheme::Peierls;
};

struct SolverConfig {
  int count = 8;
  double tol = 1e-9;
  std::uint64_t seed = 12345;
  double degeneracy_tol = 1e-6;  // in units of omega1
  int max_iter = 60;
  std::vector<HamiltonianKind> kinds{HamiltonianKind::BO, HamiltonianKind::GP, HamiltonianKind::Full};
};

struct DynamicsConfig {
  std::vector<double> temperatures{0.0};
  double t_max = 100.0;  // in units of 1/omega1
  int samples = 500;
  double tol = 1e-12;
  double eps = 1e-4;
  bool gp_dress_initial = false;
  std::vector<HamiltonianKind> kinds{HamiltonianKind::BO, HamiltonianKind::GP, HamiltonianKind::Full};
};

struct SweepConfig {
  HamiltonianKind kind = HamiltonianKind::GP;
  std::vector<double> gammas;
  double delta_min = 0.0;
  double delta_max = 2.0;
  double delta_step = 0.05;
  int count = 6;
  // eigs: also write correlation diagrams over the delta grid.
  bool correlation = false;
};

struct RunConfig {
  ModelParams model = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.0, 0.1);
  GridConfig grid;
  SolverConfig solver;
  DynamicsConfig dynamics;
  SweepConfig sweep;
  std::string out_dir = "cisim-out";

  double gamma() const { return model.gamma(); }
  GridSpec make_grid_for(const ModelParams& p) const;
  GridFactory grid_factory() const;
  OperatorOptions operator_options() const;
  EigenSolverOptions solver_options() const;
  std::vector<double> delta_grid() const;
  std::vector<double> time_grid() const;

  // Canonical key=value listing of every resolved setting (stable order).
  std::string canonical() const;
  // FNV-1a 64 of canonical(), as 16 hex digits.
  std::string hash() const;
};

// Parses the text of a config file. `source` names it in error messages.
// Overrides are "section.key=value" strings applied after the file.
// Throws ConfigError naming the key and line.
RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {},
                            const std::string& source = "<config>");
RunConfig parse_config_file(const std::string& path, const std::vector<std::string>& overrides = {});

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t v);

}  // namespace cisim
