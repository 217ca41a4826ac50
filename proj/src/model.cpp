#include "cisim/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cisim/error.hpp"

namespace cisim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CiPoint: return "CI_POINT";
    case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::InvalidGrid: return "INVALID_GRID";
    case ErrorCode::CiOnGrid: return "CI_ON_GRID";
    case ErrorCode::GridMismatch: return "GRID_MISMATCH";
    case ErrorCode::NotConverged: return "NOT_CONVERGED";
    case ErrorCode::GroupTooLarge: return "GROUP_TOO_LARGE";
    case ErrorCode::NoBarrier: return "NO_BARRIER";
    case ErrorCode::NoInflection: return "NO_INFLECTION";
    case ErrorCode::SpectralRangeFail: return "SPECTRAL_RANGE_FAIL";
    case ErrorCode::TolUnreachable: return "TOL_UNREACHABLE";
    case ErrorCode::ConfigError: return "CONFIG_ERROR";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::IoError: return "IO_ERROR";
    case ErrorCode::NonHermitian: return "NON_HERMITIAN";
  }
  return "UNKNOWN";
}

ModelParams ModelParams::from_gamma(double omega1, double omega2, double a, double delta,
                                    double gamma) {
  ModelParams p{omega1, omega2, a, delta, 0.0};
  p.c = 0.5 * gamma * omega1 * omega1 * a;
  return p;
}

ModelParams ModelParams::with_delta(double d) const {
  ModelParams p = *this;
  p.delta = d;
  return p;
}

ModelParams ModelParams::with_gamma(double g) const {
  return from_gamma(omega1, omega2, a, delta, g);
}

void ModelParams::validate() const {
  if (!(omega1 > 0.0) || !(omega2 > 0.0) || !(a > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "omega1, omega2 and a must be positive");
  }
  if (!std::isfinite(delta) || !std::isfinite(c) || !std::isfinite(gamma()) ||
      !std::isfinite(ci_x())) {
    throw Error(ErrorCode::InvalidArgument, "delta and c must be finite");
  }
}

double v11(const ModelParams& p, double x, double y) {
  const double dx = x + 0.5 * p.a;
  return 0.5 * p.omega1 * p.omega1 * dx * dx + 0.5 * p.omega2 * p.omega2 * y * y + 0.5 * p.delta;
}

double v22(const ModelParams& p, double x, double y) {
  const double dx = x - 0.5 * p.a;
  return 0.5 * p.omega1 * p.omega1 * dx * dx + 0.5 * p.omega2 * p.omega2 * y * y - 0.5 * p.delta;
}

double v12(const ModelParams& p, double /*x*/, double y) { return p.c * y; }

AdiabaticPair w_adiabatic(const ModelParams& p, double x, double y) {
  const double s = 0.5 * (v11(p, x, y) + v22(p, x, y));
  // V11 - V22 in closed form avoids cancellation far from the CI.
  const double d = 0.5 * (p.omega1 * p.omega1 * p.a * x + p.delta);
  const double r = std::hypot(d, p.c * y);
  return {s - r, s + r};
}

double polar_angle(const ModelParams& p, double x, double y) {
  return std::atan2(p.gamma() * y, x - p.ci_x());
}

double theta(const ModelParams& p, double x, double y) {
  const double u = x - p.ci_x();
  const double eps = 64.0 * std::numeric_limits<double>::epsilon() *
                     std::max({1.0, std::abs(x), std::abs(p.ci_x())});
  if (std::abs(u) <= eps && std::abs(y) <= eps) {
    throw Error(ErrorCode::CiPoint, "mixing angle undefined at the conical intersection");
  }
  return 0.5 * std::atan2(p.gamma() * y, u);
}

Point2 grad_theta(const ModelParams& p, double x, double y) {
  const double u = x - p.ci_x();
  const double g = p.gamma();
  const double den = u * u + g * g * y * y;
  if (den == 0.0) {
    throw Error(ErrorCode::CiPoint, "vector potential undefined at the conical intersection");
  }
  return {-0.5 * g * y / den, 0.5 * g * u / den};
}

SurfaceDerivatives w_minus_derivatives(const ModelParams& p, double x, double y) {
  const double w1 = p.omega1 * p.omega1;
  const double w2 = p.omega2 * p.omega2;
  const double dd = 0.5 * w1 * p.a;  // dD/dx
  const double d = 0.5 * (w1 * p.a * x + p.delta);
  const double cy = p.c * y;
  const double r = std::hypot(d, cy);
  if (r == 0.0) {
    throw Error(ErrorCode::CiPoint, "W- is not differentiable at the conical intersection");
  }
  const double r3 = r * r * r;
  SurfaceDerivatives out{};
  out.value = w_minus(p, x, y);
  out.gx = w1 * x - dd * d / r;
  out.gy = w2 * y - p.c * cy / r;
  out.hxx = w1 - dd * dd * cy * cy / r3;
  out.hyy = w2 - p.c * p.c * d * d / r3;
  out.hxy = dd * d * p.c * cy / r3;
  return out;
}

const char* to_string(StationaryKind kind) {
  switch (kind) {
    case StationaryKind::DonorMin: return "DONOR_MIN";
    case StationaryKind::AcceptorMin: return "ACCEPTOR_MIN";
    case StationaryKind::Ts1: return "TS1";
    case StationaryKind::Ts2: return "TS2";
    case StationaryKind::Ci: return "CI";
  }
  return "?";
}

std::optional<StationaryPoint> StationaryPointSet::find(StationaryKind kind) const {
  for (const auto& sp : points) {
    if (sp.kind == kind) return sp;
  }
  return std::nullopt;
}

namespace {

// Damped Newton on grad W- = 0. Returns nullopt if the gradient norm does not
// drop below tol or the iterate runs into the CI.
std::optional<Point2> newton_stationary(const ModelParams& p, Point2 seed, double tol) {
  Point2 z = seed;
  auto grad_norm = [&](Point2 q) {
    const auto d = w_minus_derivatives(p, q.x, q.y);
    return std::hypot(d.gx, d.gy);
  };
  try {
    for (int it = 0; it < 200; ++it) {
      const auto d = w_minus_derivatives(p, z.x, z.y);
      const double gn = std::hypot(d.gx, d.gy);
      if (gn < tol) return z;
      const double det = d.hxx * d.hyy - d.hxy * d.hxy;
      if (det == 0.0 || !std::isfinite(det)) return std::nullopt;
      const double sx = -(d.hyy * d.gx - d.hxy * d.gy) / det;
      const double sy = -(-d.hxy * d.gx + d.hxx * d.gy) / det;
      double step = 1.0;
      Point2 next{z.x + sx, z.y + sy};
      while (step > 1e-6 && grad_norm(next) >= gn) {
        step *= 0.5;
        next = {z.x + step * sx, z.y + step * sy};
      }
      if (step <= 1e-6) {
        // Accept the full step anyway near convergence, where rounding dominates.
        if (gn < 1e3 * tol) return z;
        return std::nullopt;
      }
      z = next;
    }
  } catch (const Error&) {
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

StationaryPointSet stationary_points(const ModelParams& p, double grad_tol) {
  p.validate();
  if (!(p.gamma() > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "stationary_points requires gamma > 0");
  }
  StationaryPointSet out;
  auto add = [&](StationaryKind kind, Point2 seed) -> bool {
    auto z = newton_stationary(p, seed, grad_tol);
    if (!z) return false;
    out.points.push_back({*z, w_minus(p, z->x, z->y), kind});
    return true;
  };

  // Minima: seeded at the diabatic well bottoms. For c^2 > omega2^2 |D| the
  // y = 0 point is a saddle and this finds it instead; not the studied regime.
  for (auto [kind, x0] : {std::pair{StationaryKind::DonorMin, -0.5 * p.a},
                          std::pair{StationaryKind::AcceptorMin, 0.5 * p.a}}) {
    if (!add(kind, {x0, 0.0})) {
      std::ostringstream msg;
      msg << "minimum search failed from seed (" << x0 << ", 0)";
      throw Error(ErrorCode::NoConvergence, msg.str());
    }
  }

  out.points.push_back({p.ci(), w_minus(p, p.ci_x(), 0.0), StationaryKind::Ci});

  // Closed-form stationarity of W- off the y = 0 line gives the seeds:
  // R = c^2/omega2^2 and omega1^2 x = (omega1^2 a / 2) D / R.
  const double w1 = p.omega1 * p.omega1;
  const double w2 = p.omega2 * p.omega2;
  const double c2 = p.c * p.c;
  const double den = 4.0 * c2 - p.a * p.a * w1 * w2;
  double xs = p.ci_x();
  double ys = std::abs(p.c) / w2;
  if (den != 0.0) {
    xs = p.a * p.delta * w2 / den;
    const double d = 0.5 * (w1 * p.a * xs + p.delta);
    const double rr = c2 / w2;
    if (rr * rr > d * d) ys = std::sqrt(rr * rr - d * d) / std::abs(p.c);
  }
  const bool ts1 = add(StationaryKind::Ts1, {xs, ys});
  const bool ts2 = ts1 && add(StationaryKind::Ts2, {xs, -ys});
  out.transition_states_found = ts1 && ts2;
  if (!out.transition_states_found) {
    std::erase_if(out.points, [](const StationaryPoint& sp) {
      return sp.kind == StationaryKind::Ts1 || sp.kind == StationaryKind::Ts2;
    });
  } else {
    // Merged transition states (large gamma) land on the minima or each other.
    const auto t1 = *out.find(StationaryKind::Ts1);
    const auto t2 = *out.find(StationaryKind::Ts2);
    if (std::abs(t1.position.y) < 1e-8 || std::abs(t1.position.y + t2.position.y) > 1e-6) {
      out.transition_states_found = false;
      std::erase_if(out.points, [](const StationaryPoint& sp) {
        return sp.kind == StationaryKind::Ts1 || sp.kind == StationaryKind::Ts2;
      });
    }
  }
  return out;
}

}  // namespace cisim
