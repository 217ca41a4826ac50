#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cisim/error.hpp"
#include "cisim/operators.hpp"
#include "cisim/spectra.hpp"

using namespace cisim;
using std::numbers::pi;

namespace {

constexpr HamiltonianKind kAll[] = {HamiltonianKind::BO, HamiltonianKind::GP, HamiltonianKind::Full,
                                    HamiltonianKind::Donor, HamiltonianKind::Acceptor};

Field random_field(const GridSpec& g, int comps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Field f(g, comps);
  for (auto& v : f.values()) v = {n(rng), n(rng)};
  return f;
}

GridSpec small_grid(const ModelParams& p, int n = 49) { return make_grid(p, n, n, default_padding(p)); }

}  // namespace

TEST_CASE("kind names round-trip") {
  for (auto k : kAll) CHECK(parse_kind(to_string(k)) == k);
  CHECK(parse_kind("full") == HamiltonianKind::Full);
  CHECK_THROWS_AS(parse_kind("xyz"), Error);
}

TEST_CASE("operators are Hermitian to rounding") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.4, 0.5);
  const auto g = small_grid(p, 57);
  for (auto kind : kAll) {
    for (auto scheme : {GpScheme::Peierls, GpScheme::Symmetrized}) {
      if (scheme == GpScheme::Symmetrized && kind != HamiltonianKind::GP) continue;
      const auto h = HamiltonianOperator::build(kind, p, g, {4, scheme, 0.0});
      for (std::uint64_t s = 0; s < 20; ++s) {
        const auto f = random_field(g, h.components(), 2 * s), u = random_field(g, h.components(), 2 * s + 1);
        const cplx a = inner(u, h.apply(f));
        const cplx b = inner(h.apply(u), f);
        CHECK(std::abs(a - b) / std::abs(a) < 1e-12);
      }
    }
  }
}

TEST_CASE("assembled matrix matches the stencil") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, -0.3, 0.4);
  const auto g = small_grid(p, 41);
  for (auto kind : kAll) {
    const auto h = HamiltonianOperator::build(kind, p, g);
    const auto m = h.assemble(0.75);
    const auto f = random_field(g, h.components(), 5);
    const CVector direct = h.apply(f).values() - 0.75 * f.values();
    CHECK((m * f.values() - direct).norm() < 1e-12 * direct.norm());
    const SparseOperator adj = m.adjoint();
    CHECK((m - adj).norm() < 1e-12 * m.norm());
  }
}

TEST_CASE("Gershgorin interval encloses Rayleigh quotients") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.4, 0.5);
  const auto g = small_grid(p, 45);
  for (auto kind : kAll) {
    const auto h = HamiltonianOperator::build(kind, p, g);
    const auto b = h.gershgorin();
    for (std::uint64_t s = 0; s < 5; ++s) {
      const double e = expectation(h, random_field(g, h.components(), 40 + s));
      CHECK(e >= b.lower);
      CHECK(e <= b.upper);
    }
    CHECK(h.potential_floor() >= b.lower);
  }
}

TEST_CASE("donor operator on the harmonic ground state") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.6, 0.1);
  const auto g = make_grid(p, 129, 129, default_padding(p));
  const auto h = HamiltonianOperator::build(HamiltonianKind::Donor, p, g);
  auto f = sample(g, [](double x, double y) { return std::exp(-0.5 * ((x + 2.0) * (x + 2.0) + y * y)); });
  f.normalize();
  CHECK(expectation(h, f) == doctest::Approx(1.0 + 0.3).epsilon(1e-5));
  // Close to an eigenvector: residual of order h^4.
  const Field r = h.apply(f);
  const CVector res = r.values() - 1.3 * f.values();
  CHECK(res.norm() * std::sqrt(g.cell()) < 1e-3);
}

TEST_CASE("BO and GP share the potential table") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.3, 2.0 / 3.0);
  const auto g = small_grid(p);
  const auto bo = HamiltonianOperator::build(HamiltonianKind::BO, p, g);
  const auto gp = HamiltonianOperator::build(HamiltonianKind::GP, p, g);
  CHECK(bo.potential_floor() == gp.potential_floor());
  // Peierls phases only dress the hops: diagonal elements coincide, hops differ.
  const auto mb = bo.assemble(), mg = gp.assemble();
  double diag = 0.0, off = 0.0;
  for (int k = 0; k < mb.outerSize(); ++k) {
    diag = std::max(diag, std::abs(mb.coeff(k, k) - mg.coeff(k, k)));
  }
  for (int k = 0; k < mg.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(mg, k); it; ++it) off = std::max(off, std::abs(it.value().imag()));
  CHECK(diag == 0.0);
  CHECK(off > 1e-3);
}

TEST_CASE("GP operator is the gauge transform of BO away from the cut") {
  // H_GP (exp(-i theta) g) = exp(-i theta) H_BO g whenever no hop touching
  // the support of g crosses the branch cut (x < x_ci, y = 0).
  for (double gamma : {0.1, 2.0 / 3.0}) {
    const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.5, gamma);
    const auto g = small_grid(p, 81);
    const auto bo = HamiltonianOperator::build(HamiltonianKind::BO, p, g);
    const auto gp = HamiltonianOperator::build(HamiltonianKind::GP, p, g);
    Field smooth = sample(g, [&](double x, double y) {
      const double u = x - p.ci_x() - 1.0;
      if (u <= 0.0) return 0.0;
      return (1.0 - std::exp(-u * u * u * u)) * std::exp(-2.0 * ((x - 2.5) * (x - 2.5) + y * y));
    });
    Field dressed = smooth;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) dressed(0, i, j) *= std::polar(1.0, -theta(p, g.x(i), g.y(j)));
    const Field lhs = gp.apply(dressed);
    Field rhs = bo.apply(smooth);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) rhs(0, i, j) *= std::polar(1.0, -theta(p, g.x(i), g.y(j)));
    CHECK((lhs.values() - rhs.values()).norm() < 1e-12 * rhs.values().norm());

    // Continuum oracle: the symmetrized scheme approximates the same
    // operator to truncation order.
    const auto sym = HamiltonianOperator::build(HamiltonianKind::GP, p, g, {4, GpScheme::Symmetrized, 0.0});
    const Field lhs2 = sym.apply(dressed);
    CHECK((lhs2.values() - rhs.values()).norm() < 0.05 * rhs.values().norm());
  }
}

TEST_CASE("FULL coupling output is odd in y") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.2, 0.5);
  const auto g = small_grid(p, 62);  // even: y grid symmetric about 0
  const auto h = HamiltonianOperator::build(HamiltonianKind::Full, p, g);
  Field f = Field::spinor(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) f(0, i, j) = std::exp(-0.5 * ((g.x(i) + 2.0) * (g.x(i) + 2.0) + g.y(j) * g.y(j)));
  const Field out = h.apply(f);
  double odd = 0.0, size = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      odd = std::max(odd, std::abs(out(1, i, j) + out(1, i, g.ny - 1 - j)));
      size = std::max(size, std::abs(out(1, i, j)));
    }
  CHECK(size > 0.0);
  CHECK(odd < 1e-14 * size);

  // c = 0: the blocks decouple and the second component stays zero.
  const auto h0 = HamiltonianOperator::build(HamiltonianKind::Full, ModelParams{1.0, 1.0, 4.0, 0.2, 0.0}, g);
  CHECK(h0.apply(f).component(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("operators commute with the dressed reflection") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.7, 0.4);
  const auto g = small_grid(p, 52);
  for (auto kind : {HamiltonianKind::BO, HamiltonianKind::GP, HamiltonianKind::Full, HamiltonianKind::Donor}) {
    const auto h = HamiltonianOperator::build(kind, p, g);
    const auto f = random_field(g, h.components(), 77);
    const Field a = h.apply(reflect_y(f, kind, p));
    const Field b = reflect_y(h.apply(f), kind, p);
    CHECK((a.values() - b.values()).norm() < 1e-12 * a.values().norm());
  }
}

TEST_CASE("expectation values") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.0, 0.3);
  const auto g = small_grid(p, 45);
  const auto h = HamiltonianOperator::build(HamiltonianKind::GP, p, g);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto f = random_field(g, 1, 300 + s);
    const cplx e = inner(f, h.apply(f)) / inner(f, f);
    CHECK(std::abs(e.imag()) < 1e-10 * std::abs(e));
    CHECK_NOTHROW(expectation(h, f));
  }
  CHECK_THROWS_AS(expectation(h, Field::scalar(g)), Error);

  // Variational bound for the decoupled FULL operator on the donor block.
  const auto p0 = ModelParams{1.0, 1.0, 4.0, 0.4, 0.0};
  const auto h0 = HamiltonianOperator::build(HamiltonianKind::Full, p0, g);
  for (std::uint64_t s = 0; s < 3; ++s) {
    Field f = Field::spinor(g);
    f.component(0) = random_field(g, 1, 500 + s).values();
    CHECK(expectation(h0, f) >= 1.0 + 0.2 - 1e-3);
  }
}

TEST_CASE("gauge shift leaves GP operator unitarily equivalent") {
  // theta -> theta + const cancels in every link phase.
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.2, 0.5);
  const auto g = small_grid(p, 45);
  const auto h0 = HamiltonianOperator::build(HamiltonianKind::GP, p, g);
  const auto h1 = HamiltonianOperator::build(HamiltonianKind::GP, p, g, {4, GpScheme::Peierls, 0.37});
  const auto f = random_field(g, 1, 3);
  CHECK((h0.apply(f).values() - h1.apply(f).values()).norm() < 1e-12 * h0.apply(f).values().norm());
}

TEST_CASE("mismatched inputs are rejected") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.2, 0.5);
  const auto g = small_grid(p, 45);
  const auto h = HamiltonianOperator::build(HamiltonianKind::Full, p, g);
  CHECK_THROWS_AS(h.apply(Field::scalar(g)), Error);
  CHECK_THROWS_AS(HamiltonianOperator::build(HamiltonianKind::BO, p, g, {6, GpScheme::Peierls, 0.0}), Error);
}
