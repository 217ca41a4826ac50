#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/SparseCore>

#include "cisim/grid.hpp"
#include "cisim/model.hpp"

namespace cisim {

enum class HamiltonianKind { BO, GP, Full, Donor, Acceptor };

std::string_view to_string(HamiltonianKind kind);
HamiltonianKind parse_kind(std::string_view name);

// How the geometric-phase momentum -i grad + grad(theta) is discretized.
//  Peierls:     every stencil hop n -> m carries exp(i * line integral of A),
//               i.e. H = exp(-i theta) H_BO exp(i theta) link by link.
//  Symmetrized: -1/2 lap - (i/2)(A.grad + grad.A) + |A|^2 / 2 with centred
//               differences.
enum class GpScheme { Peierls, Symmetrized };

struct OperatorOptions {
  int order = 4;
  GpScheme gp_scheme = GpScheme::Peierls;
  // Constant added to the mixing-angle table (gauge check).
  double theta_shift = 0.0;
};

struct SpectralBounds {
  double lower;
  double upper;
};

using SparseOperator = Eigen::SparseMatrix<cplx, Eigen::ColMajor, int>;

// Matrix-free Hermitian finite-difference Hamiltonian on a GridSpec. Every
// kind is a nearest-neighbour-line stencil with per-node complex hopping
// weights, a real diagonal per component, and (Full only) the V12 coupling
// between the two diabatic components.
class HamiltonianOperator {
 public:
  static HamiltonianOperator build(HamiltonianKind kind, const ModelParams& p, const GridSpec& g,
                                   const OperatorOptions& opt = {});

  HamiltonianKind kind() const { return kind_; }
  const ModelParams& params() const { return params_; }
  const GridSpec& grid() const { return grid_; }
  const OperatorOptions& options() const { return options_; }
  int components() const { return components_; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(components_ * grid_.size()); }

  // out = H in; both spans have length dim(). Reentrant.
  void apply(std::span<const cplx> in, std::span<cplx> out) const;
  Field apply(const Field& f) const;

  // Explicit sparse matrix (both triangles) of H - shift.
  SparseOperator assemble(double shift = 0.0) const;

  // Gershgorin enclosure of the spectrum.
  SpectralBounds gershgorin() const;
  // Smallest on-site potential eigenvalue over the grid (min W- for BO/GP/Full).
  double potential_floor() const;

  // Field shape this operator acts on.
  Field make_field() const { return Field(grid_, components_); }

 private:
  HamiltonianKind kind_ = HamiltonianKind::BO;
  ModelParams params_;
  GridSpec grid_;
  OperatorOptions options_;
  int components_ = 1;
  int reach_ = 2;
  std::array<std::vector<double>, 2> diag_;
  std::vector<double> potential_[2];
  std::vector<double> coupling_;
  // links_[axis * reach + (s - 1)][n]: weight of f(n + s along axis) in row n.
  // The reverse hop uses the conjugate of the partner's forward weight.
  std::vector<std::vector<cplx>> links_;
  // Without the gauge field every interior hop along (axis, s) has the same
  // real weight; apply() then runs a constant-coefficient stencil.
  bool uniform_links_ = true;
  std::vector<double> uniform_;
};

// Re <f|H|f> / <f|f>. Throws NonHermitian if the imaginary part exceeds 1e-10 * max(1, |E|).
double expectation(const HamiltonianOperator& h, const Field& f);

}  // namespace cisim
