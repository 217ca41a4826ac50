#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "cisim/grid.hpp"
#include "cisim/localization.hpp"
#include "cisim/operators.hpp"
#include "cisim/spectra.hpp"

namespace cisim {

struct EnsembleMember {
  double weight;
  double energy;           // numerical donor eigenvalue
  double analytic_energy;  // omega1 (n + 1/2) + omega2 (m + 1/2) + delta/2
  Field field;             // scalar donor eigenfield, unit norm
};

struct ThermalEnsemble {
  double temperature = 0.0;
  double truncation_eps = 1e-4;
  std::vector<EnsembleMember> members;
  // Largest |numerical - analytic| donor energy among members.
  double max_energy_error = 0.0;

  double weight_sum() const;
};

// Analytic donor levels E = omega1 (n + 1/2) + omega2 (m + 1/2) + delta/2,
// ascending; `count` entries.
std::vector<double> donor_levels(const ModelParams& p, std::size_t count);

// Boltzmann mixture of donor eigenstates. Whole degenerate shells are kept
// until the analytic cumulative weight reaches 1 - eps; weights then come from
// the numerical energies and are renormalized. T = 0 gives the ground state alone.
ThermalEnsemble donor_boltzmann(const ModelParams& p, const GridSpec& g, double temperature,
                                double eps = 1e-4, const OperatorOptions& op = {},
                                const EigenSolverOptions& solver = {});

// Initial state for `kind`: (phi, 0) for Full, phi itself for BO/GP. With
// gp_dress the GP state is multiplied by exp(i theta).
Field embed(const Field& member, HamiltonianKind kind, const ModelParams& p, bool gp_dress = false);

struct PropagatorOptions {
  // Bound on the truncation error of exp(-i H dt) per step, in operator norm.
  double tol = 1e-12;
  // Steps of the Lanczos probe that cross-checks the Gershgorin interval.
  int probe_steps = 30;
  std::uint64_t seed = 12345;
};

// Chebyshev expansion of exp(-i H dt) on the Gershgorin interval of H. The
// number of terms per step is the smallest K whose Bessel tail bound
// 2 sum_{k>K} |J_k(R dt)| stays below tol.
class ChebyshevPropagator {
 public:
  explicit ChebyshevPropagator(const HamiltonianOperator& h, const PropagatorOptions& opt = {});

  // f <- exp(-i H dt) f; dt may be negative.
  void step(Field& f, double dt) const;
  void step(CVector& f, double dt) const;

  SpectralBounds bounds() const { return bounds_; }
  // Extremal Ritz values of the probe.
  SpectralBounds probe() const { return probe_; }
  int terms(double dt) const { return static_cast<int>(coefficients(dt).size()); }
  // Certified truncation bound of one step of length dt.
  double truncation_bound(double dt) const;

 private:
  const std::vector<cplx>& coefficients(double dt) const;

  const HamiltonianOperator* h_;
  PropagatorOptions opt_;
  SpectralBounds bounds_{};
  SpectralBounds probe_{};
  double center_ = 0.0;
  double radius_ = 0.0;
  mutable std::map<double, std::vector<cplx>> cache_;
};

// States at each time of an increasing grid (starting from t = 0 at f0).
std::vector<Field> propagate(const HamiltonianOperator& h, const Field& f0, const std::vector<double>& times,
                             const PropagatorOptions& opt = {});

struct TraceOptions {
  PropagatorOptions propagator;
  OperatorOptions op;
  bool gp_dress_initial = false;
};

struct TransferTrace {
  HamiltonianKind kind = HamiltonianKind::BO;
  double temperature = 0.0;
  std::size_t members = 0;
  std::vector<double> times;
  std::vector<double> p_values;
  double norm_drift = 0.0;    // max over members and samples of | ||f||^2 - 1 |
  double energy_drift = 0.0;  // max over members and samples of |<H>(t) - <H>(0)|
  int terms_per_step = 0;     // Chebyshev terms for the first step
  SpectralBounds bounds{};
};

// P(t) = sum_m w_m <f_m(t)|P|f_m(t)> for the donor ensemble evolved under `kind`.
// Members run in parallel; the weighted sum is taken in member order.
TransferTrace transfer_trace(HamiltonianKind kind, const ModelParams& p, const GridSpec& g,
                             const ThermalEnsemble& ensemble, const std::vector<double>& times,
                             const TraceOptions& opt = {});
TransferTrace transfer_trace(HamiltonianKind kind, const ModelParams& p, const GridSpec& g, double temperature,
                             const std::vector<double>& times, const TraceOptions& opt = {});

// First time at which the sampled trace reaches `level` from above (linear
// interpolation between samples); NaN if it never does.
double first_crossing_time(const TransferTrace& trace, double level);

}  // namespace cisim
