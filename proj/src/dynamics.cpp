#include "cisim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <boost/math/special_functions/bessel.hpp>
#include <Eigen/Dense>

#include "cisim/error.hpp"
#include "cisim/parallel.hpp"

namespace cisim {

double ThermalEnsemble::weight_sum() const {
  double s = 0.0;
  for (const auto& m : members) s += m.weight;
  return s;
}

std::vector<double> donor_levels(const ModelParams& p, std::size_t count) {
  // Enumerate a triangle of (n, m) large enough to hold the lowest `count`.
  std::vector<double> e;
  const std::size_t span = count + 1;
  const double ratio = std::max(p.omega1, p.omega2) / std::min(p.omega1, p.omega2);
  const std::size_t nmax = static_cast<std::size_t>(std::ceil(span * ratio)) + 1;
  for (std::size_t n = 0; n <= nmax; ++n) {
    for (std::size_t m = 0; m <= nmax; ++m) {
      e.push_back(p.omega1 * (n + 0.5) + p.omega2 * (m + 0.5) + 0.5 * p.delta);
    }
  }
  std::sort(e.begin(), e.end());
  e.resize(count);
  return e;
}

ThermalEnsemble donor_boltzmann(const ModelParams& p, const GridSpec& g, double temperature, double eps,
                                const OperatorOptions& op, const EigenSolverOptions& solver) {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be finite and >= 0");
  }
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::InvalidArgument, "truncation eps must lie in (0, 1)");
  ThermalEnsemble ens;
  ens.temperature = temperature;
  ens.truncation_eps = eps;

  // Member count from the analytic ladder: the infinite partition function is
  // Z = exp(-E00/T) / ((1 - exp(-w1/T)) (1 - exp(-w2/T))).
  std::size_t count = 1;
  if (temperature > 0.0) {
    const double e00 = 0.5 * (p.omega1 + p.omega2) + 0.5 * p.delta;
    const double z_rel = 1.0 / ((1.0 - std::exp(-p.omega1 / temperature)) * (1.0 - std::exp(-p.omega2 / temperature)));
    std::size_t probe = 16;
    for (;;) {
      const auto lv = donor_levels(p, probe);
      double cum = 0.0;
      std::size_t k = 0;
      while (k < lv.size() && cum < (1.0 - eps) * z_rel) {
        cum += std::exp(-(lv[k] - e00) / temperature);
        ++k;
      }
      // Complete the last shell.
      while (k < lv.size() && std::abs(lv[k] - lv[k - 1]) < 1e-9 * std::max(1.0, std::abs(lv[k]))) ++k;
      if (k < lv.size()) {
        count = k;
        break;
      }
      probe *= 2;
      if (probe > 4096) throw Error(ErrorCode::InvalidArgument, "temperature too high for the donor ensemble");
    }
  }

  const auto h = HamiltonianOperator::build(HamiltonianKind::Donor, p, g, op);
  EigenSolverOptions sopt = solver;
  auto r = lowest_eigenpairs(h, static_cast<int>(count), sopt);
  const auto analytic = donor_levels(p, count);

  const double e0 = r.eigenvalues.front();
  double z = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double w = temperature > 0.0 ? std::exp(-(r.eigenvalues[k] - e0) / temperature) : 1.0;
    z += w;
    ens.members.push_back({w, r.eigenvalues[k], analytic[k], std::move(r.eigenfields[k])});
    ens.max_energy_error = std::max(ens.max_energy_error, std::abs(r.eigenvalues[k] - analytic[k]));
  }
  for (auto& m : ens.members) {
    m.weight /= z;
    m.field.normalize();
  }
  return ens;
}

Field embed(const Field& member, HamiltonianKind kind, const ModelParams& p, bool gp_dress) {
  if (member.components() != 1) throw Error(ErrorCode::InvalidArgument, "embed expects a scalar field");
  if (kind == HamiltonianKind::Full) {
    Field out(member.grid(), 2);
    out.component(0) = member.values();
    return out;
  }
  Field out = member;
  if (kind == HamiltonianKind::GP && gp_dress) {
    const GridSpec& g = member.grid();
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) out(0, i, j) *= std::polar(1.0, theta(p, g.x(i), g.y(j)));
    }
  }
  return out;
}

namespace {

// Kapteyn's inequality, |J_n(n z)| <= (z exp(sqrt(1 - z^2)) / (1 + sqrt(1 - z^2)))^n
// for 0 < z <= 1, as a log bound on |J_k(x)|; +inf below k = x where it does not apply.
double log_bessel_bound(double k, double x) {
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  if (k < x) return std::numeric_limits<double>::infinity();
  const double z = x / k;
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return k * (std::log(z) + s - std::log1p(s));
}

// log of 2 sum_{k>K} |J_k(tau)|. The bound decays faster than geometrically
// in k, so after 64 explicit terms the rest is dominated by a geometric
// series with the last ratio.
double log_tail_bound(int big_k, double tau) {
  const double x = std::abs(tau);
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  if (big_k + 1 < x) return std::numeric_limits<double>::infinity();
  constexpr int explicit_terms = 64;
  double lmax = log_bessel_bound(big_k + 1.0, x);
  double sum = 0.0;
  for (int k = big_k + 1; k <= big_k + explicit_terms; ++k) sum += std::exp(log_bessel_bound(k, x) - lmax);
  const double last = log_bessel_bound(big_k + explicit_terms, x);
  const double ratio = std::exp(last - log_bessel_bound(big_k + explicit_terms - 1.0, x));
  if (ratio < 1.0) sum += std::exp(last - lmax) * ratio / (1.0 - ratio);
  else return std::numeric_limits<double>::infinity();
  return std::log(2.0) + lmax + std::log(sum);
}

}  // namespace

ChebyshevPropagator::ChebyshevPropagator(const HamiltonianOperator& h, const PropagatorOptions& opt)
    : h_(&h), opt_(opt) {
  if (!(opt.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "propagation tol must be positive");
  if (opt.tol < 1e-15) {
    throw Error(ErrorCode::TolUnreachable, "propagation tol below double-precision resolution");
  }
  bounds_ = h.gershgorin();
  if (!std::isfinite(bounds_.lower) || !std::isfinite(bounds_.upper) || !(bounds_.upper > bounds_.lower)) {
    throw Error(ErrorCode::SpectralRangeFail, "degenerate or non-finite spectral bounds");
  }

  // Lanczos probe: its Ritz values must sit inside the enclosure.
  const Eigen::Index n = h.dim();
  const int steps = static_cast<int>(std::min<Eigen::Index>(opt.probe_steps, n));
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = normal(rng);
    v[i] = cplx(re, normal(rng));
  }
  v.normalize();
  CVector v_prev = CVector::Zero(n);
  CVector w(n);
  std::vector<double> alpha, beta;
  double b = 0.0;
  for (int k = 0; k < steps; ++k) {
    h.apply(std::span<const cplx>(v.data(), n), std::span<cplx>(w.data(), n));
    const double a = v.dot(w).real();
    w -= a * v + b * v_prev;
    alpha.push_back(a);
    b = w.norm();
    if (b < 1e-12) break;
    beta.push_back(b);
    v_prev = v;
    v = w / b;
  }
  const Eigen::Index m = static_cast<Eigen::Index>(alpha.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    t(k, k) = alpha[k];
    if (k + 1 < m) t(k, k + 1) = t(k + 1, k) = beta[k];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
  probe_ = {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
  const double slack = 1e-9 * (bounds_.upper - bounds_.lower);
  if (probe_.lower < bounds_.lower - slack || probe_.upper > bounds_.upper + slack) {
    std::ostringstream msg;
    msg << "Lanczos Ritz values [" << probe_.lower << ", " << probe_.upper << "] escape the enclosure ["
        << bounds_.lower << ", " << bounds_.upper << "]";
    throw Error(ErrorCode::SpectralRangeFail, msg.str());
  }
  center_ = 0.5 * (bounds_.upper + bounds_.lower);
  radius_ = 0.5 * (bounds_.upper - bounds_.lower);
}

double ChebyshevPropagator::truncation_bound(double dt) const {
  const int k = terms(dt) - 1;
  return std::exp(log_tail_bound(k, radius_ * dt));
}

const std::vector<cplx>& ChebyshevPropagator::coefficients(double dt) const {
  auto it = cache_.find(dt);
  if (it != cache_.end()) return it->second;
  const double tau = radius_ * dt;
  const double log_tol = std::log(opt_.tol);
  int big_k = static_cast<int>(std::ceil(std::abs(tau)));
  constexpr int max_terms = 1000000;
  while (log_tail_bound(big_k, tau) > log_tol) {
    ++big_k;
    if (big_k > max_terms) throw Error(ErrorCode::TolUnreachable, "Chebyshev expansion needs too many terms");
  }
  std::vector<cplx> a(big_k + 1);
  const cplx minus_i(0.0, -1.0);
  cplx ipow = 1.0;
  for (int k = 0; k <= big_k; ++k) {
    // J_k(-x) = (-1)^k J_k(x) covers backward steps.
    double jk = boost::math::cyl_bessel_j(k, std::abs(tau));
    if (tau < 0.0 && (k % 2 == 1)) jk = -jk;
    a[k] = (k == 0 ? 1.0 : 2.0) * ipow * jk;
    ipow *= minus_i;
  }
  return cache_.emplace(dt, std::move(a)).first->second;
}

void ChebyshevPropagator::step(CVector& f, double dt) const {
  const Eigen::Index n = h_->dim();
  if (f.size() != n) throw Error(ErrorCode::GridMismatch, "state length does not match the operator");
  if (dt == 0.0) return;
  const auto& a = coefficients(dt);
  // Recurrence T_{k+1} = 2 Hs T_k - T_{k-1} on Hs = (H - center) / radius,
  // fused with the accumulation into one pass per term.
  const double inv_r = 1.0 / radius_;
  const double c = center_;
  CVector t_prev = f;
  CVector t_cur(n);
  CVector w(n);
  h_->apply(std::span<const cplx>(t_prev.data(), n), std::span<cplx>(w.data(), n));
  CVector acc(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t_cur[i] = (w[i] - c * t_prev[i]) * inv_r;
    acc[i] = a[0] * t_prev[i] + a[1] * t_cur[i];
  }
  const double two_r = 2.0 * inv_r;
  for (std::size_t k = 2; k < a.size(); ++k) {
    h_->apply(std::span<const cplx>(t_cur.data(), n), std::span<cplx>(w.data(), n));
    const cplx ak = a[k];
    cplx* tp = t_prev.data();
    const cplx* tc = t_cur.data();
    const cplx* wp = w.data();
    cplx* ac = acc.data();
    // t_prev is overwritten by T_{k+1}, then the roles rotate.
    for (Eigen::Index i = 0; i < n; ++i) {
      const cplx next = two_r * (wp[i] - c * tc[i]) - tp[i];
      tp[i] = next;
      ac[i] += ak * next;
    }
    t_prev.swap(t_cur);
  }
  f = std::polar(1.0, -c * dt) * acc;
}

void ChebyshevPropagator::step(Field& f, double dt) const {
  if (!(f.grid() == h_->grid()) || f.components() != h_->components()) {
    throw Error(ErrorCode::GridMismatch, "field does not match the propagator's operator");
  }
  step(f.values(), dt);
}

std::vector<Field> propagate(const HamiltonianOperator& h, const Field& f0, const std::vector<double>& times,
                             const PropagatorOptions& opt) {
  if (!std::is_sorted(times.begin(), times.end())) {
    throw Error(ErrorCode::InvalidArgument, "time grid must be increasing");
  }
  const double n2 = f0.norm2();
  if (std::abs(n2 - 1.0) > 1e-8) throw Error(ErrorCode::InvalidArgument, "initial state must be normalized");
  const ChebyshevPropagator prop(h, opt);
  std::vector<Field> out;
  Field f = f0;
  double t = 0.0;
  for (double ti : times) {
    prop.step(f, ti - t);
    t = ti;
    out.push_back(f);
  }
  return out;
}

TransferTrace transfer_trace(HamiltonianKind kind, const ModelParams& p, const GridSpec& g,
                             const ThermalEnsemble& ensemble, const std::vector<double>& times,
                             const TraceOptions& opt) {
  if (kind != HamiltonianKind::BO && kind != HamiltonianKind::GP && kind != HamiltonianKind::Full) {
    throw Error(ErrorCode::InvalidArgument, "transfer traces are defined for BO, GP and FULL");
  }
  if (times.empty() || times.front() < 0.0 || !std::is_sorted(times.begin(), times.end())) {
    throw Error(ErrorCode::InvalidArgument, "time grid must be non-negative and increasing");
  }
  if (ensemble.members.empty()) throw Error(ErrorCode::InvalidArgument, "empty ensemble");
  const auto h = HamiltonianOperator::build(kind, p, g, opt.op);
  const ChebyshevPropagator prop(h, opt.propagator);
  const auto mask = make_projector(p, g);

  struct MemberTrace {
    std::vector<double> p;
    double norm_drift = 0.0;
    double energy_drift = 0.0;
  };
  // Warm the coefficient cache before the workers share the propagator.
  {
    double t = 0.0;
    for (double ti : times) {
      if (ti - t != 0.0) prop.terms(ti - t);
      t = ti;
    }
  }
  const auto traces = parallel_map<MemberTrace>(ensemble.members.size(), [&](std::size_t m) {
    MemberTrace tr;
    Field f = embed(ensemble.members[m].field, kind, p, opt.gp_dress_initial);
    f.normalize();
    const double e0 = expectation(h, f);
    double t = 0.0;
    for (double ti : times) {
      prop.step(f, ti - t);
      t = ti;
      tr.p.push_back(localization_P(f, mask));
      tr.norm_drift = std::max(tr.norm_drift, std::abs(f.norm2() - 1.0));
      tr.energy_drift = std::max(tr.energy_drift, std::abs(expectation(h, f) - e0));
    }
    return tr;
  });

  TransferTrace out;
  out.kind = kind;
  out.temperature = ensemble.temperature;
  out.members = ensemble.members.size();
  out.times = times;
  out.p_values.assign(times.size(), 0.0);
  out.bounds = prop.bounds();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] > 0.0) {
      out.terms_per_step = prop.terms(times[i] - (i > 0 ? times[i - 1] : 0.0));
      break;
    }
  }
  for (std::size_t m = 0; m < traces.size(); ++m) {
    const double w = ensemble.members[m].weight;
    for (std::size_t i = 0; i < times.size(); ++i) out.p_values[i] += w * traces[m].p[i];
    out.norm_drift = std::max(out.norm_drift, traces[m].norm_drift);
    out.energy_drift = std::max(out.energy_drift, traces[m].energy_drift);
  }
  for (auto& v : out.p_values) v = std::clamp(v, 0.0, 1.0);
  return out;
}

TransferTrace transfer_trace(HamiltonianKind kind, const ModelParams& p, const GridSpec& g, double temperature,
                             const std::vector<double>& times, const TraceOptions& opt) {
  const auto ens = donor_boltzmann(p, g, temperature, 1e-4, opt.op);
  return transfer_trace(kind, p, g, ens, times, opt);
}

double first_crossing_time(const TransferTrace& trace, double level) {
  double t_prev = 0.0;
  double p_prev = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    const double pv = trace.p_values[i];
    if (pv <= level) {
      if (std::isnan(p_prev)) return trace.times[i];
      const double frac = (p_prev - level) / (p_prev - pv);
      return t_prev + frac * (trace.times[i] - t_prev);
    }
    t_prev = trace.times[i];
    p_prev = pv;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace cisim
