#include "cisim/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cisim/error.hpp"

namespace cisim {

std::string_view to_string(HamiltonianKind kind) {
  switch (kind) {
    case HamiltonianKind::BO: return "BO";
    case HamiltonianKind::GP: return "GP";
    case HamiltonianKind::Full: return "FULL";
    case HamiltonianKind::Donor: return "DONOR";
    case HamiltonianKind::Acceptor: return "ACCEPTOR";
  }
  return "?";
}

HamiltonianKind parse_kind(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char ch) { return std::toupper(ch); });
  if (up == "BO") return HamiltonianKind::BO;
  if (up == "GP") return HamiltonianKind::GP;
  if (up == "FULL") return HamiltonianKind::Full;
  if (up == "DONOR") return HamiltonianKind::Donor;
  if (up == "ACCEPTOR") return HamiltonianKind::Acceptor;
  throw Error(ErrorCode::InvalidArgument, "unknown Hamiltonian kind '" + std::string(name) + "'");
}

namespace {

// Reduce a mixing-angle difference to the line integral of grad(theta) along
// a straight hop: the result lies in (-pi/2, pi/2); a jump across the branch
// cut differs by +/- pi.
double link_phase(double theta_from, double theta_to) {
  return std::remainder(theta_to - theta_from, std::numbers::pi);
}

}  // namespace

HamiltonianOperator HamiltonianOperator::build(HamiltonianKind kind, const ModelParams& p,
                                               const GridSpec& g, const OperatorOptions& opt) {
  p.validate();
  const auto w = stencil_weights(opt.order);
  HamiltonianOperator h;
  h.kind_ = kind;
  h.params_ = p;
  h.grid_ = g;
  h.options_ = opt;
  h.components_ = kind == HamiltonianKind::Full ? 2 : 1;
  h.reach_ = w.reach;

  const std::size_t n = g.size();
  const double hx = g.hx();
  const double hy = g.hy();
  const double kin0 = -0.5 * w.second[0] * (1.0 / (hx * hx) + 1.0 / (hy * hy));

  for (int k = 0; k < h.components_; ++k) h.potential_[k].assign(n, 0.0);
  if (kind == HamiltonianKind::Full) h.coupling_.assign(n, 0.0);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x(i);
      const double y = g.y(j);
      const std::size_t idx = g.index(i, j);
      switch (kind) {
        case HamiltonianKind::BO:
        case HamiltonianKind::GP: h.potential_[0][idx] = w_minus(p, x, y); break;
        case HamiltonianKind::Donor: h.potential_[0][idx] = v11(p, x, y); break;
        case HamiltonianKind::Acceptor: h.potential_[0][idx] = v22(p, x, y); break;
        case HamiltonianKind::Full:
          h.potential_[0][idx] = v11(p, x, y);
          h.potential_[1][idx] = v22(p, x, y);
          h.coupling_[idx] = v12(p, x, y);
          break;
      }
    }
  }

  h.links_.assign(2 * w.reach, std::vector<cplx>(n, cplx(0.0)));
  h.uniform_.assign(2 * w.reach, 0.0);
  h.uniform_links_ = kind != HamiltonianKind::GP;
  for (int axis = 0; axis < 2; ++axis) {
    const double hh = axis == 0 ? hx : hy;
    for (int s = 1; s <= w.reach; ++s) {
      const double t = -0.5 * w.second[s] / (hh * hh);
      auto& link = h.links_[axis * w.reach + (s - 1)];
      h.uniform_[axis * w.reach + (s - 1)] = t;
      for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
          const int i2 = axis == 0 ? i + s : i;
          const int j2 = axis == 1 ? j + s : j;
          if (i2 >= g.nx || j2 >= g.ny) continue;
          link[g.index(i, j)] = t;
        }
      }
    }
  }

  for (int k = 0; k < h.components_; ++k) {
    h.diag_[k].resize(n);
    for (std::size_t idx = 0; idx < n; ++idx) h.diag_[k][idx] = kin0 + h.potential_[k][idx];
  }

  if (kind == HamiltonianKind::GP) {
    if (ci_on_node(p, g)) {
      throw Error(ErrorCode::CiOnGrid, "a grid node coincides with the conical intersection");
    }
    if (opt.gp_scheme == GpScheme::Peierls) {
      std::vector<double> th(n);
      for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) th[g.index(i, j)] = theta(p, g.x(i), g.y(j)) + opt.theta_shift;
      }
      constexpr double edge = 0.5 * std::numbers::pi - 1e-12;
      for (int axis = 0; axis < 2; ++axis) {
        const std::size_t stride = axis == 0 ? 1 : static_cast<std::size_t>(g.nx);
        for (int s = 1; s <= w.reach; ++s) {
          auto& link = h.links_[axis * w.reach + (s - 1)];
          for (std::size_t idx = 0; idx < n; ++idx) {
            if (link[idx] == cplx(0.0)) continue;
            const double phi = link_phase(th[idx], th[idx + s * stride]);
            if (std::abs(phi) > edge) {
              throw Error(ErrorCode::CiOnGrid, "a stencil hop passes through the conical intersection");
            }
            link[idx] *= std::polar(1.0, phi);
          }
        }
      }
    } else {
      std::vector<double> ax(n), ay(n);
      for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
          const auto a = grad_theta(p, g.x(i), g.y(j));
          const std::size_t idx = g.index(i, j);
          ax[idx] = a.x;
          ay[idx] = a.y;
          h.diag_[0][idx] += 0.5 * (a.x * a.x + a.y * a.y);
        }
      }
      for (int axis = 0; axis < 2; ++axis) {
        const std::size_t stride = axis == 0 ? 1 : static_cast<std::size_t>(g.nx);
        const double hh = axis == 0 ? hx : hy;
        const auto& a = axis == 0 ? ax : ay;
        for (int s = 1; s <= w.reach; ++s) {
          auto& link = h.links_[axis * w.reach + (s - 1)];
          const double d = w.first[s] / hh;
          for (std::size_t idx = 0; idx < n; ++idx) {
            if (link[idx] == cplx(0.0)) continue;
            link[idx] += cplx(0.0, -0.5 * d * (a[idx] + a[idx + s * stride]));
          }
        }
      }
    }
  }
  return h;
}

void HamiltonianOperator::apply(std::span<const cplx> in, std::span<cplx> out) const {
  const std::size_t n = grid_.size();
  if (in.size() != static_cast<std::size_t>(dim()) || out.size() != in.size()) {
    throw Error(ErrorCode::GridMismatch, "vector length does not match operator dimension");
  }
  const int nx = grid_.nx;
  const int ny = grid_.ny;
  for (int k = 0; k < components_; ++k) {
    const cplx* f = in.data() + k * n;
    cplx* o = out.data() + k * n;
    const double* d = diag_[k].data();
    for (std::size_t idx = 0; idx < n; ++idx) o[idx] = d[idx] * f[idx];
    if (components_ == 2) {
      const cplx* other = in.data() + (1 - k) * n;
      for (std::size_t idx = 0; idx < n; ++idx) o[idx] += coupling_[idx] * other[idx];
    }
    // Each forward hop (n -> n + s e_axis) contributes to both rows it joins.
    for (int s = 1; s <= reach_; ++s) {
      if (uniform_links_) {
        const double tx = uniform_[s - 1];
        const double ty = uniform_[reach_ + s - 1];
        for (int j = 0; j < ny; ++j) {
          const std::size_t row = static_cast<std::size_t>(j) * nx;
          const cplx* fr = f + row;
          cplx* orow = o + row;
          for (int i = 0; i + s < nx; ++i) orow[i] += tx * (fr[i + s]);
          for (int i = s; i < nx; ++i) orow[i] += tx * (fr[i - s]);
        }
        const std::size_t shift = static_cast<std::size_t>(s) * nx;
        const std::size_t span = n - shift;
        for (std::size_t idx = 0; idx < span; ++idx) {
          o[idx] += ty * f[idx + shift];
          o[idx + shift] += ty * f[idx];
        }
      } else {
        const cplx* lx = links_[s - 1].data();
        const cplx* ly = links_[reach_ + s - 1].data();
        for (int j = 0; j < ny; ++j) {
          const std::size_t row = static_cast<std::size_t>(j) * nx;
          for (int i = 0; i + s < nx; ++i) {
            const std::size_t idx = row + i;
            o[idx] += lx[idx] * f[idx + s];
            o[idx + s] += std::conj(lx[idx]) * f[idx];
          }
        }
        const std::size_t shift = static_cast<std::size_t>(s) * nx;
        const std::size_t span = n - shift;
        for (std::size_t idx = 0; idx < span; ++idx) {
          o[idx] += ly[idx] * f[idx + shift];
          o[idx + shift] += std::conj(ly[idx]) * f[idx];
        }
      }
    }
  }
}

Field HamiltonianOperator::apply(const Field& f) const {
  if (!(f.grid() == grid_) || f.components() != components_) {
    throw Error(ErrorCode::GridMismatch, "field does not match operator grid/components");
  }
  Field out = make_field();
  apply(std::span<const cplx>(f.values().data(), f.values().size()),
        std::span<cplx>(out.values().data(), out.values().size()));
  return out;
}

SparseOperator HamiltonianOperator::assemble(double shift) const {
  const std::size_t n = grid_.size();
  std::vector<Eigen::Triplet<cplx, int>> trip;
  trip.reserve(static_cast<std::size_t>(dim()) * (1 + 4 * reach_ + 1));
  const int nx = grid_.nx;
  for (int k = 0; k < components_; ++k) {
    const int off = static_cast<int>(k * n);
    for (std::size_t idx = 0; idx < n; ++idx) {
      const int r = off + static_cast<int>(idx);
      trip.emplace_back(r, r, cplx(diag_[k][idx] - shift));
      for (int axis = 0; axis < 2; ++axis) {
        const int stride = axis == 0 ? 1 : nx;
        for (int s = 1; s <= reach_; ++s) {
          const cplx t = links_[axis * reach_ + s - 1][idx];
          if (t == cplx(0.0)) continue;
          const int c = r + s * stride;
          trip.emplace_back(r, c, t);
          trip.emplace_back(c, r, std::conj(t));
        }
      }
      if (components_ == 2 && coupling_[idx] != 0.0) {
        trip.emplace_back(r, static_cast<int>((1 - k) * n + idx), cplx(coupling_[idx]));
      }
    }
  }
  SparseOperator m(dim(), dim());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SpectralBounds HamiltonianOperator::gershgorin() const {
  const std::size_t n = grid_.size();
  const int nx = grid_.nx;
  std::vector<double> radius(static_cast<std::size_t>(dim()), 0.0);
  for (int k = 0; k < components_; ++k) {
    for (std::size_t idx = 0; idx < n; ++idx) {
      for (int axis = 0; axis < 2; ++axis) {
        const std::size_t stride = axis == 0 ? 1 : static_cast<std::size_t>(nx);
        for (int s = 1; s <= reach_; ++s) {
          const double t = std::abs(links_[axis * reach_ + s - 1][idx]);
          if (t == 0.0) continue;
          radius[k * n + idx] += t;
          radius[k * n + idx + s * stride] += t;
        }
      }
      if (components_ == 2) radius[k * n + idx] += std::abs(coupling_[idx]);
    }
  }
  SpectralBounds b{1e300, -1e300};
  for (int k = 0; k < components_; ++k) {
    for (std::size_t idx = 0; idx < n; ++idx) {
      b.lower = std::min(b.lower, diag_[k][idx] - radius[k * n + idx]);
      b.upper = std::max(b.upper, diag_[k][idx] + radius[k * n + idx]);
    }
  }
  return b;
}

double HamiltonianOperator::potential_floor() const {
  double lo = 1e300;
  const std::size_t n = grid_.size();
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (components_ == 2) {
      const double s = 0.5 * (potential_[0][idx] + potential_[1][idx]);
      const double r = std::hypot(0.5 * (potential_[0][idx] - potential_[1][idx]), coupling_[idx]);
      lo = std::min(lo, s - r);
    } else {
      lo = std::min(lo, potential_[0][idx]);
    }
  }
  return lo;
}

double expectation(const HamiltonianOperator& h, const Field& f) {
  const Field hf = h.apply(f);
  const cplx num = inner(f, hf);
  const double den = f.norm2();
  if (!(den > 0.0)) throw Error(ErrorCode::InvalidArgument, "expectation of a zero field");
  const cplx e = num / den;
  if (std::abs(e.imag()) > 1e-10 * std::max(1.0, std::abs(e.real()))) {
    throw Error(ErrorCode::NonHermitian,
                "imaginary part " + std::to_string(e.imag()) + " in expectation value");
  }
  return e.real();
}

}  // namespace cisim
