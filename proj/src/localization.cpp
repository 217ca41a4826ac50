#include "cisim/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <gsl/gsl_bspline.h>
#include <boost/math/tools/minima.hpp>
#include <Eigen/Dense>

#include "cisim/error.hpp"
#include "cisim/parallel.hpp"

namespace cisim {

RegionMask RegionMask::complement() const {
  RegionMask m = *this;
  for (auto& v : m.indicator) v = 1.0 - v;
  return m;
}

double barrier_abscissa(const ModelParams& p, bool* no_barrier) {
  p.validate();
  const double lo = -0.5 * p.a;
  const double hi = 0.5 * p.a;
  auto neg = [&](double x) { return -w_minus(p, x, 0.0); };
  // W-(x, 0) rises from the donor bottom and falls to the acceptor bottom when
  // a barrier exists; Brent on -W- then converges to its top (a cusp at the CI).
  const auto r = boost::math::tools::brent_find_minima(neg, lo, hi, std::numeric_limits<double>::digits / 2 + 4);
  const double span = hi - lo;
  const bool interior = r.first > lo + 1e-6 * span && r.first < hi - 1e-6 * span &&
                        -r.second > w_minus(p, lo, 0.0) && -r.second > w_minus(p, hi, 0.0);
  if (no_barrier) *no_barrier = !interior;
  return interior ? r.first : p.ci_x();
}

RegionMask make_projector(const ModelParams& p, const GridSpec& g) {
  RegionMask m;
  m.grid = g;
  m.x_sep = barrier_abscissa(p, &m.no_barrier);
  m.indicator.assign(g.size(), 0.0);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) m.indicator[g.index(i, j)] = g.x(i) < m.x_sep ? 1.0 : 0.0;
  }
  return m;
}

namespace {

// <f|P|g> with the mask applied on every component (no cell factor).
cplx masked_inner(const Field& f, const Field& g, const RegionMask& mask) {
  const std::size_t n = mask.grid.size();
  cplx acc = 0.0;
  for (int k = 0; k < f.components(); ++k) {
    const auto a = f.component(k);
    const auto b = g.component(k);
    for (std::size_t idx = 0; idx < n; ++idx) {
      if (mask.indicator[idx] != 0.0) acc += mask.indicator[idx] * std::conj(a[idx]) * b[idx];
    }
  }
  return acc;
}

void check_mask(const Field& f, const RegionMask& mask) {
  if (!(f.grid() == mask.grid)) throw Error(ErrorCode::GridMismatch, "field and mask grids differ");
}

}  // namespace

double localization_P(const Field& f, const RegionMask& mask) {
  check_mask(f, mask);
  const double total = f.values().squaredNorm();
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "localization of a zero field");
  return std::clamp(masked_inner(f, f, mask).real() / total, 0.0, 1.0);
}

double max_localization(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols() || m.rows() < 1 || m.rows() > 2) {
    throw Error(ErrorCode::GroupTooLarge, "localization subspace must have one or two members");
  }
  const Eigen::MatrixXcd h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

SubspaceLocalization subspace_localization(const std::vector<Field>& group, const RegionMask& mask) {
  if (group.empty() || group.size() > 2) {
    std::ostringstream msg;
    msg << "degeneracy group of size " << group.size() << " (only 1 or 2 supported)";
    throw Error(ErrorCode::GroupTooLarge, msg.str());
  }
  for (const auto& f : group) check_mask(f, mask);
  SubspaceLocalization out;
  if (group.size() == 1) {
    out.p_max = localization_P(group[0], mask);
    out.fields = group;
    return out;
  }
  // Members are orthonormal in the grid inner product; use plain sums and
  // normalize by the member norms so M is a projector matrix in that basis.
  const double n0 = group[0].values().norm();
  const double n1 = group[1].values().norm();
  Eigen::Matrix2cd m;
  m(0, 0) = masked_inner(group[0], group[0], mask) / (n0 * n0);
  m(1, 1) = masked_inner(group[1], group[1], mask) / (n1 * n1);
  m(0, 1) = masked_inner(group[0], group[1], mask) / (n0 * n1);
  m(1, 0) = std::conj(m(0, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(m);
  out.p_max = std::clamp(es.eigenvalues()[1], 0.0, 1.0);
  for (int c : {1, 0}) {
    Field f(group[0].grid(), group[0].components());
    f.values() = es.eigenvectors()(0, c) * group[0].values() / n0 + es.eigenvectors()(1, c) * group[1].values() / n1;
    f.values() *= std::sqrt(1.0 / f.grid().cell()) / f.values().norm();
    out.fields.push_back(std::move(f));
  }
  return out;
}

SubspaceLocalization subspace_localization(const EigenSolveResult& result, const std::vector<int>& group,
                                           const RegionMask& mask) {
  std::vector<Field> fields;
  for (int idx : group) {
    if (idx < 0 || idx >= static_cast<int>(result.size())) {
      throw Error(ErrorCode::InvalidArgument, "group index outside the eigen result");
    }
    fields.push_back(result.eigenfields[idx]);
  }
  return subspace_localization(fields, mask);
}

namespace {

int sign_of(double parity) { return parity >= 0.0 ? 1 : -1; }

// Lowest sorted index >= 1 whose parity sign equals `sector`.
int lowest_in_sector(const std::vector<double>& parities, int sector) {
  for (std::size_t k = 1; k < parities.size(); ++k) {
    if (sign_of(parities[k]) == sector) return static_cast<int>(k);
  }
  throw Error(ErrorCode::InvalidArgument,
              "no excited state in the tracked parity sector; increase the eigenpair count");
}

// Reference row: smallest nonzero |delta| (the donor partner is state 1 there).
int reference_sector(const std::vector<double>& deltas, const std::vector<std::vector<double>>& parities) {
  std::size_t ref = deltas.size();
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (deltas[i] == 0.0) continue;
    if (ref == deltas.size() || std::abs(deltas[i]) < std::abs(deltas[ref])) ref = i;
  }
  if (ref == deltas.size()) ref = 0;
  if (parities[ref].size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two states per solve");
  return sign_of(parities[ref][1]);
}

struct PointSolve {
  std::vector<double> energies;
  std::vector<double> parities;
  std::vector<double> p;  // localization of each sorted state
  double p_doublet = -1.0;  // subspace-maximized P of a degenerate ground pair
};

PointSolve solve_point(HamiltonianKind kind, const ModelParams& p, const GridSpec& g, const CurveOptions& opt) {
  const auto h = HamiltonianOperator::build(kind, p, g, opt.op);
  auto r = lowest_eigenpairs(h, opt.count, opt.solver);
  resolve_parity(r, kind, p);
  const auto mask = make_projector(p, g);
  PointSolve out;
  out.energies = r.eigenvalues;
  for (const auto& f : r.eigenfields) {
    out.parities.push_back(parity_character(f, kind, p));
    out.p.push_back(localization_P(f, mask));
  }
  if (r.degeneracy_groups.front().size() == 2) {
    out.p_doublet = subspace_localization(r, r.degeneracy_groups.front(), mask).p_max;
  }
  return out;
}

std::vector<CurveSample> assemble_curve(const std::vector<double>& deltas, const std::vector<PointSolve>& pts) {
  std::vector<std::vector<double>> parities;
  for (const auto& s : pts) parities.push_back(s.parities);
  const int sector = reference_sector(deltas, parities);
  std::vector<CurveSample> curve;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto& s = pts[i];
    if (s.p_doublet >= 0.0) {
      // Degenerate ground pair: the donor member of the localized rotation.
      curve.push_back({deltas[i], 1.0 - s.p_doublet, s.energies[0], 0.0});
      continue;
    }
    const int k = lowest_in_sector(s.parities, sector);
    CurveSample c{deltas[i], 1.0 - s.p[k], s.energies[k], s.parities[k]};
    for (std::size_t q = k + 1; q < s.parities.size(); ++q) {
      if (sign_of(s.parities[q]) == sector) {
        c.gap = s.energies[q] - s.energies[k];
        break;
      }
    }
    curve.push_back(c);
  }
  return curve;
}

void check_curve_kind(HamiltonianKind kind) {
  if (kind != HamiltonianKind::GP && kind != HamiltonianKind::Full) {
    throw Error(ErrorCode::InvalidArgument, "delocalization curves are defined for GP and FULL");
  }
}

}  // namespace

GapMinimum curve_gap_minimum(const std::vector<CurveSample>& curve) {
  std::vector<double> x, y;
  for (const auto& c : curve) {
    x.push_back(c.delta);
    y.push_back(c.gap);
  }
  return sampled_minimum(x, y);
}

SectorSelection first_excited_sector(const CorrelationDiagram& d) {
  std::vector<double> deltas;
  for (const auto& row : d.rows) deltas.push_back(row.delta);
  SectorSelection sel;
  sel.parity = reference_sector(deltas, d.sorted_parities);
  for (const auto& par : d.sorted_parities) sel.index.push_back(lowest_in_sector(par, sel.parity));
  return sel;
}

std::vector<CurveSample> delocalization_curve(HamiltonianKind kind, const ModelParams& base,
                                              const std::vector<double>& deltas, const GridFactory& make,
                                              const CurveOptions& opt) {
  check_curve_kind(kind);
  if (deltas.empty()) return {};
  const auto pts = parallel_map<PointSolve>(deltas.size(), [&](std::size_t i) {
    const ModelParams p = base.with_delta(deltas[i]);
    return solve_point(kind, p, make(p), opt);
  });
  return assemble_curve(deltas, pts);
}

CriticalPoint critical_deltas(const std::vector<CurveSample>& curve) {
  const std::size_t n = curve.size();
  if (n < 6) throw Error(ErrorCode::InvalidArgument, "critical_deltas needs at least 6 samples");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(curve[i].delta > curve[i - 1].delta)) {
      throw Error(ErrorCode::InvalidArgument, "curve deltas must be strictly increasing");
    }
  }
  const double lo = curve.front().delta;
  const double hi = curve.back().delta;
  const double spacing = (hi - lo) / static_cast<double>(n - 1);
  const double bandwidth = 3.0 * spacing;
  // Uniform breakpoints about `bandwidth` apart, and no more coefficients than samples.
  std::size_t nbreak = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround((hi - lo) / bandwidth)) + 1);
  nbreak = std::min(nbreak, n - 2);
  const std::size_t order = 4;

  gsl_bspline_workspace* ws = gsl_bspline_alloc(order, nbreak);
  gsl_bspline_knots_uniform(lo, hi, ws);
  const std::size_t nc = gsl_bspline_ncoeffs(ws);
  gsl_vector* b = gsl_vector_alloc(nc);
  gsl_matrix* db = gsl_matrix_alloc(nc, 3);

  Eigen::MatrixXd design(n, nc);
  Eigen::VectorXd rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_bspline_eval(curve[i].delta, b, ws);
    for (std::size_t c = 0; c < nc; ++c) design(i, c) = gsl_vector_get(b, c);
    rhs[i] = curve[i].one_minus_p;
  }
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(rhs);

  auto eval = [&](double x, int deriv) {
    gsl_bspline_deriv_eval(std::clamp(x, lo, hi), 2, db, ws);
    double s = 0.0;
    for (std::size_t c = 0; c < nc; ++c) s += coef[c] * gsl_matrix_get(db, c, deriv);
    return s;
  };

  // Coarse scan for the derivative maximum, then Brent refinement around it.
  const int scan = 2000;
  double best_x = lo;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= scan; ++k) {
    const double x = lo + (hi - lo) * k / scan;
    const double d = eval(x, 1);
    if (d > best) {
      best = d;
      best_x = x;
    }
  }
  const double step = (hi - lo) / scan;
  const auto r = boost::math::tools::brent_find_minima([&](double x) { return -eval(x, 1); },
                                                       std::max(lo, best_x - step), std::min(hi, best_x + step),
                                                       std::numeric_limits<double>::digits / 2 + 4);
  const double xi = r.first;
  const double slope = -r.second;
  const double yi = eval(xi, 0);

  gsl_matrix_free(db);
  gsl_vector_free(b);
  gsl_bspline_free(ws);

  if (xi <= lo + 0.5 * spacing || xi >= hi - 0.5 * spacing || !(slope > 0.0)) {
    std::ostringstream msg;
    msg << "no interior inflection: derivative maximum at delta = " << xi << " (range " << lo << ".." << hi << ")";
    throw Error(ErrorCode::NoInflection, msg.str());
  }
  CriticalPoint cp;
  cp.delta_inflection = xi;
  cp.slope = slope;
  cp.delta_tangent = xi - yi / slope;
  cp.bandwidth = (hi - lo) / static_cast<double>(nbreak - 1);
  cp.curve = curve;
  return cp;
}

std::vector<CriticalPoint> phase_diagram(HamiltonianKind kind, const ModelParams& base,
                                         const std::vector<double>& gammas, const std::vector<double>& deltas,
                                         const GridFactory& make, const CurveOptions& opt) {
  check_curve_kind(kind);
  if (gammas.empty()) return {};
  const std::size_t nd = deltas.size();
  // One flat job list over (gamma, delta) so the pool stays busy.
  const auto pts = parallel_map<PointSolve>(gammas.size() * nd, [&](std::size_t job) {
    const ModelParams p = base.with_gamma(gammas[job / nd]).with_delta(deltas[job % nd]);
    return solve_point(kind, p, make(p), opt);
  });
  std::vector<CriticalPoint> out;
  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    const std::vector<PointSolve> slice(pts.begin() + gi * nd, pts.begin() + (gi + 1) * nd);
    auto curve = assemble_curve(deltas, slice);
    CriticalPoint cp;
    try {
      cp = critical_deltas(curve);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoInflection) throw;
      cp.inflection_found = false;
      cp.delta_inflection = cp.delta_tangent = cp.slope = std::numeric_limits<double>::quiet_NaN();
      cp.curve = std::move(curve);
    }
    cp.gamma = gammas[gi];
    out.push_back(std::move(cp));
  }
  return out;
}

}  // namespace cisim
