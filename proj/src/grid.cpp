#include "cisim/grid.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cisim/error.hpp"

namespace cisim {

double default_padding(const ModelParams& p, const GridOptions& opt) {
  return std::sqrt(2.0 * opt.energy_cap) / p.omega1;
}

namespace {

// Shift an axis by half a spacing if one of its nodes sits on `target`.
bool shift_off(double& lo, double& hi, int n, double target, int sign, double rel_tol) {
  const double h = (hi - lo) / (n - 1);
  const double k = (target - lo) / h;
  const double nearest = std::round(k);
  if (nearest >= 0 && nearest <= n - 1 && std::abs(k - nearest) * h <= rel_tol * h) {
    const double s = (sign >= 0 ? 0.5 : -0.5) * h;
    lo += s;
    hi += s;
    return true;
  }
  return false;
}

// Smallest shift that puts `target` midway between two nodes; a target on a
// node moves in the direction of `sign`.
bool centre_on(double& lo, double& hi, int n, double target, int sign, double rel_tol) {
  const double h = (hi - lo) / (n - 1);
  const double k = (target - lo) / h;
  const double frac = k - std::floor(k);  // in [0, 1)
  double s = (frac - 0.5) * h;            // moving lo by s puts target at a midpoint
  if (std::abs(frac) <= rel_tol || std::abs(frac - 1.0) <= rel_tol) s = (sign >= 0 ? 0.5 : -0.5) * h;
  if (std::abs(s) <= rel_tol * h) return false;
  lo += s;
  hi += s;
  return true;
}

}  // namespace

GridSpec make_grid_extents(const ModelParams& p, int nx, int ny, double x_min, double x_max,
                           double y_min, double y_max, const GridOptions& opt) {
  if (nx < 32 || ny < 32) {
    throw Error(ErrorCode::InvalidGrid, "nx and ny must be at least 32");
  }
  if (!(x_max > x_min) || !(y_max > y_min)) {
    throw Error(ErrorCode::InvalidGrid, "grid extents must be non-empty");
  }
  GridSpec g{nx, ny, x_min, x_max, y_min, y_max, false};
  auto place = opt.ci_placement == CiPlacement::CellCentre ? centre_on : shift_off;
  const bool sx = place(g.x_min, g.x_max, nx, p.ci_x(), opt.offset_sign, 1e-8);
  const bool sy = place(g.y_min, g.y_max, ny, 0.0, opt.offset_sign, 1e-8);
  g.ci_offset_applied = sx || sy;
  return g;
}

GridSpec make_grid(const ModelParams& p, int nx, int ny, double padding, const GridOptions& opt) {
  if (!(padding > 0.0)) {
    throw Error(ErrorCode::InvalidGrid, "padding must be positive");
  }
  const double half_x = 0.5 * p.a + padding;
  // W- >= omega2^2 y^2 / 2 - |c y| - |delta| / 2 along a wall at height y.
  const double w2 = p.omega2 * p.omega2;
  const double ac = std::abs(p.c);
  const double y_cap =
      (ac + std::sqrt(ac * ac + w2 * (2.0 * opt.energy_cap + std::abs(p.delta)))) / w2;
  const double half_y = std::max(half_x, y_cap);
  return make_grid_extents(p, nx, ny, -half_x, half_x, -half_y, half_y, opt);
}

bool ci_on_node(const ModelParams& p, const GridSpec& g, double rel_tol) {
  const double kx = (p.ci_x() - g.x_min) / g.hx();
  const double ky = (0.0 - g.y_min) / g.hy();
  const double ix = std::round(kx);
  const double iy = std::round(ky);
  return ix >= 0 && ix < g.nx && iy >= 0 && iy < g.ny && std::abs(kx - ix) <= rel_tol &&
         std::abs(ky - iy) <= rel_tol;
}

Field::Field(const GridSpec& grid, int components)
    : grid_(grid), components_(components), values_(CVector::Zero(components * grid.size())) {
  if (components != 1 && components != 2) {
    throw Error(ErrorCode::InvalidArgument, "fields have one or two components");
  }
}

Field::Field(const GridSpec& grid, int components, CVector values)
    : grid_(grid), components_(components), values_(std::move(values)) {
  if (components != 1 && components != 2) {
    throw Error(ErrorCode::InvalidArgument, "fields have one or two components");
  }
  if (static_cast<std::size_t>(values_.size()) != components * grid.size()) {
    throw Error(ErrorCode::GridMismatch, "value count does not match grid");
  }
}

double Field::norm2() const { return values_.squaredNorm() * grid_.cell(); }

double Field::normalize() {
  const double n = std::sqrt(norm2());
  if (n > 0.0) values_ /= n;
  return n;
}

void require_compatible(const Field& f, const Field& g) {
  if (!(f.grid() == g.grid()) || f.components() != g.components()) {
    throw Error(ErrorCode::GridMismatch, "fields live on different grids or component counts");
  }
}

cplx inner(const Field& f, const Field& g) {
  require_compatible(f, g);
  return f.values().dot(g.values()) * f.grid().cell();
}

StencilWeights stencil_weights(int order) {
  if (order == 2) return {{-2.0, 1.0, 0.0}, {0.0, 0.5, 0.0}, 1};
  if (order == 4) {
    return {{-30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0}, {0.0, 8.0 / 12.0, -1.0 / 12.0}, 2};
  }
  throw Error(ErrorCode::InvalidArgument, "stencil order must be 2 or 4");
}

Field laplacian_apply(const Field& f, int order) {
  const auto w = stencil_weights(order);
  const GridSpec& g = f.grid();
  const double ix2 = 1.0 / (g.hx() * g.hx());
  const double iy2 = 1.0 / (g.hy() * g.hy());
  Field out(g, f.components());
  for (int k = 0; k < f.components(); ++k) {
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        cplx acc = w.second[0] * (ix2 + iy2) * f(k, i, j);
        for (int s = 1; s <= w.reach; ++s) {
          if (i - s >= 0) acc += w.second[s] * ix2 * f(k, i - s, j);
          if (i + s < g.nx) acc += w.second[s] * ix2 * f(k, i + s, j);
          if (j - s >= 0) acc += w.second[s] * iy2 * f(k, i, j - s);
          if (j + s < g.ny) acc += w.second[s] * iy2 * f(k, i, j + s);
        }
        out(k, i, j) = acc;
      }
    }
  }
  return out;
}

void write_field_csv(std::ostream& os, const Field& f) {
  const GridSpec& g = f.grid();
  os << "# cisim field\n"
     << std::setprecision(17) << "# nx=" << g.nx << " ny=" << g.ny << " x_min=" << g.x_min
     << " x_max=" << g.x_max << " y_min=" << g.y_min << " y_max=" << g.y_max
     << " ci_offset_applied=" << (g.ci_offset_applied ? 1 : 0)
     << " components=" << f.components() << "\n"
     << "component,i,j,x,y,re,im\n";
  for (int k = 0; k < f.components(); ++k) {
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const cplx v = f(k, i, j);
        os << k << ',' << i << ',' << j << ',' << g.x(i) << ',' << g.y(j) << ',' << v.real()
           << ',' << v.imag() << '\n';
      }
    }
  }
}

void write_field_csv(const std::string& path, const Field& f) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  write_field_csv(os, f);
}

void write_field_binary(const std::string& path, const Field& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  const GridSpec& g = f.grid();
  os << std::setprecision(17) << "CISIMFIELD " << g.nx << ' ' << g.ny << ' ' << g.x_min << ' '
     << g.x_max << ' ' << g.y_min << ' ' << g.y_max << ' ' << (g.ci_offset_applied ? 1 : 0)
     << ' ' << f.components() << '\n';
  static_assert(sizeof(cplx) == 2 * sizeof(double));
  os.write(reinterpret_cast<const char*>(f.values().data()),
           static_cast<std::streamsize>(f.values().size() * sizeof(cplx)));
  if (!os) throw Error(ErrorCode::IoError, "write failed for " + path);
}

Field read_field_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  std::getline(is, line);
  std::istringstream hs(line);
  std::string magic;
  GridSpec g;
  int offset = 0;
  int comps = 0;
  hs >> magic >> g.nx >> g.ny >> g.x_min >> g.x_max >> g.y_min >> g.y_max >> offset >> comps;
  if (!hs || magic != "CISIMFIELD") throw Error(ErrorCode::IoError, "bad field header in " + path);
  g.ci_offset_applied = offset != 0;
  CVector v(static_cast<Eigen::Index>(comps * g.size()));
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(cplx)));
  if (!is) throw Error(ErrorCode::IoError, "truncated field data in " + path);
  return Field(g, comps, std::move(v));
}

}  // namespace cisim
