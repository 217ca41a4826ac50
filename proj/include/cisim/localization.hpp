#pragma once

#include <limits>
#include <vector>

#include "cisim/grid.hpp"
#include "cisim/operators.hpp"
#include "cisim/spectra.hpp"

namespace cisim {

// Donor-region indicator: 1 for nodes with x < x_sep, 0 otherwise.
struct RegionMask {
  GridSpec grid;
  std::vector<double> indicator;  // per node, index = GridSpec::index(i, j)
  double x_sep = 0.0;
  // Set when W-(x, 0) has no interior maximum between the well bottoms; x_sep
  // then falls back to the CI abscissa.
  bool no_barrier = false;

  // Acceptor-side mask (1 - indicator), same separator.
  RegionMask complement() const;
};

// Abscissa of the maximum of W-(x, 0) between the two diabatic well bottoms.
// Returns the CI abscissa and sets *no_barrier if the profile is monotone.
double barrier_abscissa(const ModelParams& p, bool* no_barrier = nullptr);

RegionMask make_projector(const ModelParams& p, const GridSpec& g);

// Weight of |f|^2 (summed over components) on the masked region, relative to the norm.
double localization_P(const Field& f, const RegionMask& mask);

struct SubspaceLocalization {
  double p_max = 0.0;
  // Rotated members: fields[0] maximizes P; fields[1] (if any) is its orthogonal partner.
  std::vector<Field> fields;
};

// Largest eigenvalue of M_ij = <psi_i|P|psi_j> over a group of one or two
// orthonormal fields. Throws GroupTooLarge for bigger groups.
SubspaceLocalization subspace_localization(const std::vector<Field>& group, const RegionMask& mask);
SubspaceLocalization subspace_localization(const EigenSolveResult& result, const std::vector<int>& group,
                                           const RegionMask& mask);
// Same maximization given the 2x2 (or 1x1) Hermitian matrix M directly.
double max_localization(const Eigen::MatrixXcd& m);

struct CurveSample {
  double delta;
  double one_minus_p;
  double energy;  // energy of the selected state
  double parity;  // its reflection character
  // Distance to the next level of the same parity sector (the avoided-crossing
  // partner); NaN when the solve holds no such level or at a degenerate delta = 0.
  double gap = std::numeric_limits<double>::quiet_NaN();
};

// Minimum of CurveSample::gap over the curve, refined by a parabola through
// the smallest sample and its neighbours.
GapMinimum curve_gap_minimum(const std::vector<CurveSample>& curve);

struct CurveOptions {
  int count = 8;  // eigenpairs per solve
  OperatorOptions op;
  EigenSolverOptions solver;
};

// 1 - P of the first excited state across delta (kind GP or Full). The state
// is the donor-side partner of the ground state for small |delta|: the
// lowest level of the parity sector the ground state does not occupy, which
// follows avoided crossings adiabatically and ignores symmetry-allowed true
// crossings. At delta = 0 the ground doublet is localized by rotation instead.
std::vector<CurveSample> delocalization_curve(HamiltonianKind kind, const ModelParams& base,
                                              const std::vector<double>& deltas, const GridFactory& make,
                                              const CurveOptions& opt = {});

// Same selection applied to an existing correlation diagram (sorted spectra).
// Returns the parity sector and, per row, the sorted index of the selected state.
struct SectorSelection {
  int parity = 1;
  std::vector<int> index;
};
SectorSelection first_excited_sector(const CorrelationDiagram& d);

struct CriticalPoint {
  double gamma = 0.0;
  double delta_inflection = 0.0;
  double delta_tangent = 0.0;
  double slope = 0.0;      // spline derivative at the inflection
  double bandwidth = 0.0;  // knot spacing of the smoothing spline
  // False when the curve had no interior inflection (phase_diagram only);
  // the deltas are then NaN.
  bool inflection_found = true;
  std::vector<CurveSample> curve;
};

// Least-squares cubic B-spline through (delta, 1-P) with knot spacing of
// three sample spacings; the inflection is the interior maximum of its first
// derivative and the tangent there is intersected with 1-P = 0.
// Throws NoInflection if the derivative maximum sits on the boundary.
CriticalPoint critical_deltas(const std::vector<CurveSample>& curve);

// Curve + critical deltas per gamma, all (gamma, delta) solves in one parallel
// pool. Rows keep gamma order; a gamma without inflection gets NaN deltas.
std::vector<CriticalPoint> phase_diagram(HamiltonianKind kind, const ModelParams& base,
                                         const std::vector<double>& gammas, const std::vector<double>& deltas,
                                         const GridFactory& make, const CurveOptions& opt = {});

}  // namespace cisim
