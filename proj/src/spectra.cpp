#include "cisim/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <type_traits>

#include <Eigen/Dense>
#include <Eigen/CholmodSupport>

#include "cisim/error.hpp"
#include "cisim/parallel.hpp"

namespace cisim {

namespace {

using CMatrix = Eigen::MatrixXcd;

// Two passes of Cholesky QR (Gram matrix products run at BLAS-3 speed);
// Householder QR if the Gram matrix is numerically singular.
template <class M>
M orthonormal_basis(const M& v) {
  M q = v;
  for (int pass = 0; pass < 2; ++pass) {
    const M gram = q.adjoint() * q;
    Eigen::LLT<M> llt(gram);
    const double dmax = gram.diagonal().real().maxCoeff();
    if (llt.info() != Eigen::Success ||
        M(llt.matrixL()).diagonal().real().minCoeff() < 1e-7 * std::sqrt(dmax)) {
      Eigen::HouseholderQR<M> qr(v);
      return qr.householderQ() * M::Identity(v.rows(), v.cols());
    }
    q = llt.matrixU().template solve<Eigen::OnTheRight>(q);
  }
  return q;
}

// Fixes the arbitrary phase of an eigenvector: largest-magnitude entry real positive.
void fix_phase(Eigen::Ref<Eigen::VectorXcd> v) {
  Eigen::Index k = 0;
  v.cwiseAbs2().maxCoeff(&k);
  const cplx z = v[k];
  if (std::abs(z) > 0.0) v *= std::conj(z) / std::abs(z);
}

struct RawEigen {
  Eigen::VectorXd values;
  CMatrix vectors;
  Eigen::VectorXd residuals;
  double worst = 0.0;
  int iterations = 0;
};

// Block Krylov shift-invert iteration in the scalar type of the operator:
// real for every kind but GP, which quarters the dense work.
template <class Scalar>
RawEigen block_krylov(const HamiltonianOperator& h, int count, const EigenSolverOptions& opt,
                      double abs_tol) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Sparse = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, int>;
  auto convert = [](const SparseOperator& m) -> Sparse {
    if constexpr (std::is_same_v<Scalar, double>) {
      return m.real();
    } else {
      return m;
    }
  };
  const Eigen::Index n = h.dim();
  const int p = count + opt.guard;

  // Shift below the potential floor; the kinetic part lifts the lowest level
  // by about the zero-point energy. H - sigma is then positive definite; if the
  // factorization disagrees, move the shift further down.
  const double wmin = std::min(h.params().omega1, h.params().omega2);
  double sigma = h.potential_floor() - 0.25 * wmin;
  const Sparse hs = convert(h.assemble(0.0));
  Eigen::CholmodSupernodalLLT<Sparse, Eigen::Lower> chol;
  for (int attempt = 0;; ++attempt) {
    chol.compute(convert(h.assemble(sigma)));
    if (chol.info() == Eigen::Success) break;
    if (attempt == 3) throw Error(ErrorCode::NotConverged, "factorization of H - sigma failed");
    sigma -= 4.0 * wmin;
  }

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat x(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if constexpr (std::is_same_v<Scalar, double>) {
        x(i, j) = normal(rng);
      } else {
        const double re = normal(rng);
        x(i, j) = Scalar(re, normal(rng));
      }
    }
  }
  x = orthonormal_basis(x);

  const int depth = std::max(1, opt.krylov_depth);
  RawEigen out;
  out.residuals.resize(count);
  Eigen::VectorXd ritz;
  for (out.iterations = 1; out.iterations <= opt.max_iter; ++out.iterations) {
    Mat krylov(n, p * (depth + 1));
    krylov.leftCols(p) = x;
    Mat w = x;
    for (int d = 1; d <= depth; ++d) {
      w = chol.solve(w);
      // Keep the block well scaled before it joins the basis.
      for (Eigen::Index j = 0; j < p; ++j) w.col(j).normalize();
      krylov.middleCols(d * p, p) = w;
    }
    const Mat q = orthonormal_basis(krylov);
    const Mat hq = hs * q;
    Mat g = q.adjoint() * hq;
    g = (0.5 * (g + g.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    ritz = es.eigenvalues().head(p);
    const Mat y = es.eigenvectors().leftCols(p);
    x = q * y;
    const Mat hx = hq * y;
    out.worst = 0.0;
    for (int k = 0; k < count; ++k) {
      out.residuals[k] = (hx.col(k) - ritz[k] * x.col(k)).norm();
      out.worst = std::max(out.worst, out.residuals[k]);
    }
    if (out.worst <= abs_tol) break;
    // Re-orthonormalize to shed drift accumulated through the products.
    x = orthonormal_basis(x);
  }
  out.iterations = std::min(out.iterations, opt.max_iter);
  out.values = ritz.head(count);
  out.vectors = x.leftCols(count).template cast<cplx>();
  return out;
}

}  // namespace

std::vector<std::vector<int>> group_degeneracies(const std::vector<double>& eigenvalues,
                                                 double tol) {
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(eigenvalues.size()); ++i) {
    if (i > 0 && eigenvalues[i] - eigenvalues[i - 1] < tol) {
      groups.back().push_back(i);
    } else {
      groups.push_back({i});
    }
  }
  return groups;
}

EigenSolveResult lowest_eigenpairs(const HamiltonianOperator& h, int count,
                                   const EigenSolverOptions& opt) {
  const Eigen::Index n = h.dim();
  if (count < 1 || 4 * (count + opt.guard) > n) {
    throw Error(ErrorCode::InvalidArgument, "eigenpair count must be >= 1 and much smaller than the grid");
  }
  const auto bounds = h.gershgorin();
  const double norm_est = std::max(std::abs(bounds.lower), std::abs(bounds.upper));
  const double abs_tol = opt.tol * norm_est;

  const RawEigen raw = h.kind() == HamiltonianKind::GP
                           ? block_krylov<cplx>(h, count, opt, abs_tol)
                           : block_krylov<double>(h, count, opt, abs_tol);
  if (raw.worst > abs_tol) {
    std::ostringstream msg;
    msg << "eigensolver did not converge after " << opt.max_iter
        << " iterations; worst residual " << raw.worst << " > " << abs_tol;
    throw Error(ErrorCode::NotConverged, msg.str());
  }

  EigenSolveResult out;
  out.iterations = raw.iterations;
  out.residual_tol = abs_tol;
  const double scale = 1.0 / std::sqrt(h.grid().cell());
  for (int k = 0; k < count; ++k) {
    out.eigenvalues.push_back(raw.values[k]);
    out.residual_norms.push_back(raw.residuals[k]);
    Eigen::VectorXcd v = raw.vectors.col(k);
    fix_phase(v);
    out.eigenfields.emplace_back(h.grid(), h.components(), v * scale);
  }
  out.degeneracy_groups = group_degeneracies(out.eigenvalues, opt.degeneracy_tol);
  return out;
}

Field reflect_y(const Field& f, HamiltonianKind kind, const ModelParams& p) {
  const GridSpec& g = f.grid();
  // Node j maps to j' with y(j') = -y(j): j' = -2 y_min / hy - j.
  const double shift = -2.0 * g.y_min / g.hy();
  const double js = std::round(shift);
  if (std::abs(shift - js) > 1e-6) {
    throw Error(ErrorCode::InvalidArgument, "grid is not symmetric under y -> -y");
  }
  const int jshift = static_cast<int>(js);
  Field out(g, f.components());
  for (int k = 0; k < f.components(); ++k) {
    const double sign = (kind == HamiltonianKind::Full && k == 1) ? -1.0 : 1.0;
    for (int j = 0; j < g.ny; ++j) {
      const int jr = jshift - j;
      if (jr < 0 || jr >= g.ny) continue;
      for (int i = 0; i < g.nx; ++i) {
        cplx v = sign * f(k, i, jr);
        if (kind == HamiltonianKind::GP) v *= std::polar(1.0, -polar_angle(p, g.x(i), g.y(j)));
        out(k, i, j) = v;
      }
    }
  }
  return out;
}

double parity_character(const Field& f, HamiltonianKind kind, const ModelParams& p) {
  const double n2 = f.norm2();
  if (!(n2 > 0.0)) throw Error(ErrorCode::InvalidArgument, "parity of a zero field");
  return inner(f, reflect_y(f, kind, p)).real() / n2;
}

void resolve_parity(EigenSolveResult& r, HamiltonianKind kind, const ModelParams& p) {
  for (const auto& group : r.degeneracy_groups) {
    if (group.size() < 2) continue;
    const auto m = static_cast<Eigen::Index>(group.size());
    std::vector<Field> reflected;
    for (int idx : group) reflected.push_back(reflect_y(r.eigenfields[idx], kind, p));
    Eigen::MatrixXcd pm(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) pm(a, b) = inner(r.eigenfields[group[a]], reflected[b]);
    }
    pm = 0.5 * (pm + pm.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pm);
    std::vector<Field> rotated;
    for (Eigen::Index c = 0; c < m; ++c) {
      Field f(r.eigenfields[group[0]].grid(), r.eigenfields[group[0]].components());
      for (Eigen::Index a = 0; a < m; ++a) f.values() += es.eigenvectors()(a, c) * r.eigenfields[group[a]].values();
      fix_phase(f.values());
      rotated.push_back(std::move(f));
    }
    // Descending parity: +1 member first.
    for (Eigen::Index c = 0; c < m; ++c) r.eigenfields[group[c]] = std::move(rotated[m - 1 - c]);
  }
}

CorrelationDiagram correlation_diagram(HamiltonianKind kind, const ModelParams& base,
                                       const std::vector<double>& deltas, int count,
                                       const GridFactory& make, const OperatorOptions& op,
                                       const EigenSolverOptions& opt) {
  if (!std::is_sorted(deltas.begin(), deltas.end())) {
    throw Error(ErrorCode::InvalidArgument, "delta list must be sorted");
  }
  const auto solves = parallel_map<EigenSolveResult>(deltas.size(), [&](std::size_t i) {
    const ModelParams p = base.with_delta(deltas[i]);
    const auto h = HamiltonianOperator::build(kind, p, make(p), op);
    auto r = lowest_eigenpairs(h, count, opt);
    resolve_parity(r, kind, p);
    return r;
  });

  CorrelationDiagram d;
  d.kind = kind;
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const ModelParams p = base.with_delta(deltas[i]);
    const auto& cur = solves[i];
    std::vector<double> par(count);
    for (int k = 0; k < count; ++k) par[k] = parity_character(cur.eigenfields[k], kind, p);
    d.sorted_energies.push_back(cur.eigenvalues);
    d.sorted_parities.push_back(par);

    if (i > 0 && solves[i - 1].eigenfields[0].grid() == cur.eigenfields[0].grid()) {
      const auto& prev = solves[i - 1];
      // overlap(a, b): tracked column a (prev state order[a]) vs current state b.
      struct Cand {
        double ov;
        double de;
        int a;
        int b;
      };
      std::vector<Cand> cands;
      for (int a = 0; a < count; ++a) {
        for (int b = 0; b < count; ++b) {
          const double ov = std::norm(inner(prev.eigenfields[order[a]], cur.eigenfields[b]));
          cands.push_back({ov, std::abs(prev.eigenvalues[order[a]] - cur.eigenvalues[b]), a, b});
        }
      }
      std::sort(cands.begin(), cands.end(), [](const Cand& l, const Cand& r) {
        if (std::abs(l.ov - r.ov) > 1e-3) return l.ov > r.ov;
        return l.de < r.de;
      });
      std::vector<int> next(count, -1);
      std::vector<bool> used(count, false);
      for (const auto& c : cands) {
        if (next[c.a] >= 0 || used[c.b]) continue;
        next[c.a] = c.b;
        used[c.b] = true;
      }
      order = next;
    }
    CorrelationRow row{deltas[i], {}, {}};
    for (int a = 0; a < count; ++a) {
      row.energies.push_back(cur.eigenvalues[order[a]]);
      row.parities.push_back(par[order[a]]);
    }
    d.rows.push_back(std::move(row));
  }
  return d;
}

GapMinimum sampled_minimum(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = y.size();
  std::size_t k = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isfinite(y[i]) && (k == n || y[i] < y[k])) k = i;
  }
  if (k == n) throw Error(ErrorCode::InvalidArgument, "no finite samples to minimize");
  GapMinimum out{x[k], y[k], k};
  if (k > 0 && k + 1 < n && std::isfinite(y[k - 1]) && std::isfinite(y[k + 1])) {
    const double x0 = x[k - 1], x1 = x[k], x2 = x[k + 1];
    const double y0 = y[k - 1], y1 = y[k], y2 = y[k + 1];
    const double den = (x0 - x1) * (x0 - x2) * (x1 - x2);
    const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den;
    const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den;
    if (a > 0.0) {
      const double xv = -b / (2.0 * a);
      if (xv > x0 && xv < x2) {
        out.delta = xv;
        out.gap = a * xv * xv + b * xv + (y1 - a * x1 * x1 - b * x1);
      }
    }
  }
  return out;
}

GapMinimum sector_gap_minimum(const CorrelationDiagram& d, int parity) {
  std::vector<double> x;
  std::vector<double> gaps;
  for (std::size_t i = 0; i < d.sorted_energies.size(); ++i) {
    std::vector<double> sector;
    for (std::size_t k = 0; k < d.sorted_energies[i].size(); ++k) {
      if ((d.sorted_parities[i][k] > 0 ? 1 : -1) == parity) sector.push_back(d.sorted_energies[i][k]);
    }
    x.push_back(d.rows[i].delta);
    gaps.push_back(sector.size() >= 2 ? sector[1] - sector[0] : std::numeric_limits<double>::infinity());
  }
  if (std::none_of(gaps.begin(), gaps.end(), [](double g) { return std::isfinite(g); })) {
    throw Error(ErrorCode::InvalidArgument, "parity sector has fewer than two levels");
  }
  return sampled_minimum(x, gaps);
}

}  // namespace cisim
