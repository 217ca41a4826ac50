#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cisim/grid.hpp"
#include "cisim/operators.hpp"

namespace cisim {

struct EigenSolverOptions {
  // Residual target relative to the Gershgorin norm estimate of H.
  double tol = 1e-9;
  std::uint64_t seed = 12345;
  double degeneracy_tol = 1e-6;
  int max_iter = 60;
  // Powers of the shift-inverted operator stacked per outer iteration.
  int krylov_depth = 3;
  // Guard vectors carried beyond the requested count.
  int guard = 4;
};

struct EigenSolveResult {
  std::vector<double> eigenvalues;
  std::vector<Field> eigenfields;
  std::vector<double> residual_norms;
  std::vector<std::vector<int>> degeneracy_groups;
  double residual_tol = 0.0;
  int iterations = 0;

  std::size_t size() const { return eigenvalues.size(); }
};

// Lowest `count` eigenpairs by block Krylov iteration on (H - sigma)^-1 with
// Rayleigh-Ritz on H, sigma just below the potential floor. Deterministic for
// a given seed. Throws NotConverged (with the best residual) after max_iter.
EigenSolveResult lowest_eigenpairs(const HamiltonianOperator& h, int count,
                                   const EigenSolverOptions& opt = {});

// Partition of ascending eigenvalues into runs with neighbouring gaps < tol.
std::vector<std::vector<int>> group_degeneracies(const std::vector<double>& eigenvalues,
                                                 double tol);

// Reflection y -> -y as a field map, dressed per Hamiltonian kind so that it
// commutes with H: sigma_z on the second diabatic component for Full, and the
// gauge factor exp(-2 i theta) for GP. Nodes mapped outside the box are zeroed.
Field reflect_y(const Field& f, HamiltonianKind kind, const ModelParams& p);

// <f|R|f> / <f|f> in [-1, 1] with R = reflect_y for the given kind.
double parity_character(const Field& f, HamiltonianKind kind, const ModelParams& p);

// Rotates every degenerate group of `r` into eigenvectors of the reflection,
// so members carry parity +/-1.
void resolve_parity(EigenSolveResult& r, HamiltonianKind kind, const ModelParams& p);

using GridFactory = std::function<GridSpec(const ModelParams&)>;

struct CorrelationRow {
  double delta;
  // Energies and parities in tracked order: column k follows one state.
  std::vector<double> energies;
  std::vector<double> parities;
};

struct CorrelationDiagram {
  HamiltonianKind kind;
  std::vector<CorrelationRow> rows;
  // Energy-ordered spectra and parity signs per delta, before tracking.
  std::vector<std::vector<double>> sorted_energies;
  std::vector<std::vector<double>> sorted_parities;
};

// Solves each delta independently (parallel), then matches states between
// neighbouring deltas by maximal eigenfield overlap (ties by energy).
CorrelationDiagram correlation_diagram(HamiltonianKind kind, const ModelParams& base,
                                       const std::vector<double>& deltas, int count,
                                       const GridFactory& make, const OperatorOptions& op = {},
                                       const EigenSolverOptions& opt = {});

struct GapMinimum {
  double delta;
  double gap;
  std::size_t index;
};

// Minimum over delta of the gap between the two lowest levels whose parity
// sign is `parity` (sorted spectra), refined by a parabola through the
// smallest sample and its neighbours.
GapMinimum sector_gap_minimum(const CorrelationDiagram& d, int parity);

// Minimum of sampled y(x) (non-finite entries skipped) with the same parabolic refinement.
GapMinimum sampled_minimum(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace cisim
