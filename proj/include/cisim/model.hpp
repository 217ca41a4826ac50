#pragma once

#include <optional>
#include <vector>

namespace cisim {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Linear two-state conical-intersection model: two identical shifted 2D
// parabolas (donor V11 at x = -a/2, acceptor V22 at x = +a/2, bias delta)
// coupled by V12 = c*y. Units hbar = 1, unit mass.
struct ModelParams {
  double omega1 = 1.0;
  double omega2 = 1.0;
  double a = 4.0;
  double delta = 0.0;
  double c = 0.0;

  static ModelParams from_gamma(double omega1, double omega2, double a, double delta,
                                double gamma);

  // Dimensionless coupling 2c / (omega1^2 a).
  double gamma() const { return 2.0 * c / (omega1 * omega1 * a); }
  // x-coordinate of the degeneracy point, where V11 = V22 and V12 = 0.
  double ci_x() const { return -delta / (omega1 * omega1 * a); }
  Point2 ci() const { return {ci_x(), 0.0}; }

  ModelParams with_delta(double d) const;
  ModelParams with_gamma(double g) const;

  // Throws InvalidArgument on non-positive frequencies/separation or non-finite values.
  void validate() const;
};

double v11(const ModelParams& p, double x, double y);
double v22(const ModelParams& p, double x, double y);
double v12(const ModelParams& p, double x, double y);

struct AdiabaticPair {
  double minus;
  double plus;
};

AdiabaticPair w_adiabatic(const ModelParams& p, double x, double y);
inline double w_minus(const ModelParams& p, double x, double y) {
  return w_adiabatic(p, x, y).minus;
}

// Mixing angle 1/2 atan2(gamma*y, x - x_ci) in (-pi/2, pi/2]; the branch cut
// is the ray x < x_ci, y = 0. Throws CiPoint at the degeneracy.
double theta(const ModelParams& p, double x, double y);

// Full-range angle atan2(gamma*y, x - x_ci) = 2*theta, no CI check.
double polar_angle(const ModelParams& p, double x, double y);

// Vector potential A = grad(theta). Smooth everywhere except the CI.
Point2 grad_theta(const ModelParams& p, double x, double y);

// Analytic gradient and Hessian of the lower adiabatic surface.
struct SurfaceDerivatives {
  double value;
  double gx, gy;
  double hxx, hxy, hyy;
};
SurfaceDerivatives w_minus_derivatives(const ModelParams& p, double x, double y);

enum class StationaryKind { DonorMin, AcceptorMin, Ts1, Ts2, Ci };

const char* to_string(StationaryKind kind);

struct StationaryPoint {
  Point2 position;
  double energy;
  StationaryKind kind;
};

struct StationaryPointSet {
  std::vector<StationaryPoint> points;
  // False when the transition-state search failed (TS entries omitted).
  bool transition_states_found = false;

  std::optional<StationaryPoint> find(StationaryKind kind) const;
};

// Damped Newton search on grad W-. Throws NoConvergence if a minimum search fails;
// transition states are optional (flagged).
StationaryPointSet stationary_points(const ModelParams& p, double grad_tol = 1e-10);

}  // namespace cisim
