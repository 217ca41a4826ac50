#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "cisim/model.hpp"

namespace cisim {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;

// Uniform node grid on [x_min, x_max] x [y_min, y_max]; node (i, j) has flat
// index j*nx + i (x fastest). Dirichlet walls: fields vanish outside.
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  bool ci_offset_applied = false;

  double hx() const { return (x_max - x_min) / (nx - 1); }
  double hy() const { return (y_max - y_min) / (ny - 1); }
  double cell() const { return hx() * hy(); }
  double x(int i) const { return x_min + i * hx(); }
  double y(int j) const { return y_min + j * hy(); }
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }

  bool operator==(const GridSpec&) const = default;
};

// Where the CI lands relative to the nodes.
//  CellCentre: both axes shifted (by at most h/2) so the CI is at the centre
//              of a cell; the CI then has the same position relative to the
//              stencil at every resolution, which keeps grid refinement regular.
//  AvoidNode:  an axis is shifted by h/2 only when a node line passes through the CI.
enum class CiPlacement { CellCentre, AvoidNode };

struct GridOptions {
  // Energy (above the well bottoms) the harmonic walls must reach.
  double energy_cap = 20.0;
  // +1 or -1: direction of the half-spacing shift used to keep the CI off grid lines.
  int offset_sign = +1;
  CiPlacement ci_placement = CiPlacement::CellCentre;
};

// Default x padding: distance from a well bottom at which omega1^2 x^2 / 2 = cap.
double default_padding(const ModelParams& p, const GridOptions& opt = {});

// Box [-a/2 - padding, a/2 + padding] in x. The y half-width is the larger of
// the x half-width and the distance at which W- on the wall reaches the cap.
// The box is then shifted per GridOptions::ci_placement so no node line
// passes through the CI.
GridSpec make_grid(const ModelParams& p, int nx, int ny, double padding,
                   const GridOptions& opt = {});

// Explicit extents, with the same CI-avoidance rule.
GridSpec make_grid_extents(const ModelParams& p, int nx, int ny, double x_min, double x_max,
                           double y_min, double y_max, const GridOptions& opt = {});

// True when some node lies within tol*h of the CI.
bool ci_on_node(const ModelParams& p, const GridSpec& g, double rel_tol = 1e-8);

// Complex amplitude on the grid with one (scalar) or two (diabatic spinor)
// components stored component-major.
class Field {
 public:
  Field() = default;
  Field(const GridSpec& grid, int components);
  Field(const GridSpec& grid, int components, CVector values);

  static Field scalar(const GridSpec& grid) { return Field(grid, 1); }
  static Field spinor(const GridSpec& grid) { return Field(grid, 2); }

  const GridSpec& grid() const { return grid_; }
  int components() const { return components_; }
  bool is_spinor() const { return components_ == 2; }

  CVector& values() { return values_; }
  const CVector& values() const { return values_; }

  auto component(int k) { return values_.segment(k * grid_.size(), grid_.size()); }
  auto component(int k) const { return values_.segment(k * grid_.size(), grid_.size()); }

  cplx& operator()(int k, int i, int j) { return values_[k * grid_.size() + grid_.index(i, j)]; }
  cplx operator()(int k, int i, int j) const {
    return values_[k * grid_.size() + grid_.index(i, j)];
  }

  double norm2() const;
  // Scales to unit norm; returns the previous norm.
  double normalize();

 private:
  GridSpec grid_;
  int components_ = 1;
  CVector values_;
};

// Riemann-sum inner product sum conj(f) g hx hy.
cplx inner(const Field& f, const Field& g);

// Same grid and component count, or GridMismatch.
void require_compatible(const Field& f, const Field& g);

// Central finite-difference second-derivative weights (order 2 or 4):
// w[0] is the centre, w[s] multiplies f(i +/- s).
struct StencilWeights {
  double second[3];
  double first[3];
  int reach;
};
StencilWeights stencil_weights(int order);

// Laplacian with Dirichlet walls, applied componentwise.
Field laplacian_apply(const Field& f, int order = 4);

// Samples a function of (x, y) onto a scalar field.
template <class F>
Field sample(const GridSpec& g, F&& fn) {
  Field out = Field::scalar(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) out(0, i, j) = fn(g.x(i), g.y(j));
  }
  return out;
}

// Debug dumps. CSV: comment header with the GridSpec, then rows
// "component,i,j,x,y,re,im" in node-major order (x fastest).
void write_field_csv(std::ostream& os, const Field& f);
void write_field_csv(const std::string& path, const Field& f);

// Binary: one text header line "CISIMFIELD nx ny x_min x_max y_min y_max
// ci_offset_applied components\n" followed by little-endian (re, im) doubles in storage order.
void write_field_binary(const std::string& path, const Field& f);
Field read_field_binary(const std::string& path);

}  // namespace cisim
