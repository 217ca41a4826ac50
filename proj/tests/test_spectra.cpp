#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "cisim/error.hpp"
#include "cisim/spectra.hpp"

using namespace cisim;

namespace {

GridSpec grid_for(const ModelParams& p, int n) { return make_grid(p, n, n, default_padding(p)); }

std::vector<double> dense_lowest(const HamiltonianOperator& h, int count) {
  const Eigen::MatrixXcd m = Eigen::MatrixXcd(h.assemble());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + count);
  return out;
}

}  // namespace

TEST_CASE("iterative solver agrees with dense diagonalization") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.3, 0.5);
  const auto g = make_grid(p, 33, 35, 3.5);
  for (auto kind : {HamiltonianKind::BO, HamiltonianKind::GP, HamiltonianKind::Full, HamiltonianKind::Donor,
                    HamiltonianKind::Acceptor}) {
    const auto h = HamiltonianOperator::build(kind, p, g);
    const auto r = lowest_eigenpairs(h, 6);
    const auto ref = dense_lowest(h, 6);
    for (int k = 0; k < 6; ++k) CHECK(r.eigenvalues[k] == doctest::Approx(ref[k]).epsilon(1e-9));
    for (int k = 0; k < 6; ++k) {
      CHECK(std::abs(r.eigenfields[k].norm2() - 1.0) < 1e-10);
      const Field res = h.apply(r.eigenfields[k]);
      CHECK((res.values() - r.eigenvalues[k] * r.eigenfields[k].values()).norm() * std::sqrt(g.cell()) <
            10 * r.residual_tol);
      for (int l = 0; l < k; ++l) CHECK(std::abs(inner(r.eigenfields[k], r.eigenfields[l])) < 1e-8);
    }
  }
}

TEST_CASE("donor spectrum is the harmonic ladder") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.8, 0.1);
  const auto h = HamiltonianOperator::build(HamiltonianKind::Donor, p, grid_for(p, 193));
  const auto r = lowest_eigenpairs(h, 3);
  const double ladder[] = {1.0, 2.0, 2.0};
  for (int k = 0; k < 3; ++k) CHECK(std::abs(r.eigenvalues[k] - ladder[k] - 0.4) < 1e-5);
  REQUIRE(r.degeneracy_groups.size() == 2);
  CHECK(r.degeneracy_groups[1] == std::vector<int>{1, 2});
}

TEST_CASE("parity characters of harmonic states") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.0, 0.1);
  const auto g = grid_for(p, 97);
  auto r = lowest_eigenpairs(HamiltonianOperator::build(HamiltonianKind::Donor, p, g), 3);
  resolve_parity(r, HamiltonianKind::Donor, p);
  CHECK(parity_character(r.eigenfields[0], HamiltonianKind::Donor, p) == doctest::Approx(1.0).epsilon(1e-9));
  // Degenerate pair (x- and y-excited) resolved into +1 and -1 members.
  CHECK(parity_character(r.eigenfields[1], HamiltonianKind::Donor, p) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(parity_character(r.eigenfields[2], HamiltonianKind::Donor, p) == doctest::Approx(-1.0).epsilon(1e-9));
  auto y1 = sample(g, [](double x, double y) { return y * std::exp(-0.5 * ((x + 2.0) * (x + 2.0) + y * y)); });
  CHECK(parity_character(y1, HamiltonianKind::Donor, p) == doctest::Approx(-1.0));
}

TEST_CASE("double degeneracy with the gauge field, splitting without") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.0, 0.1);
  const auto g = grid_for(p, 97);
  for (auto kind : {HamiltonianKind::GP, HamiltonianKind::Full}) {
    const auto r = lowest_eigenpairs(HamiltonianOperator::build(kind, p, g), 4);
    CHECK(r.eigenvalues[1] - r.eigenvalues[0] < 1e-6);
    CHECK(r.eigenvalues[3] - r.eigenvalues[2] < 1e-6);
    CHECK(r.eigenvalues[2] - r.eigenvalues[1] > 0.1);
  }
  const auto bo = lowest_eigenpairs(HamiltonianOperator::build(HamiltonianKind::BO, p, g), 2);
  CHECK(bo.eigenvalues[1] - bo.eigenvalues[0] > 1e-8);
  CHECK(bo.eigenvalues[1] - bo.eigenvalues[0] > 1e-2);

  // Brute-force oracle for the BO tunnelling splitting on a coarse grid.
  const auto gc = make_grid(p, 45, 41, 3.0);
  const auto hc = HamiltonianOperator::build(HamiltonianKind::BO, p, gc);
  const auto ref = dense_lowest(hc, 2);
  const auto it = lowest_eigenpairs(hc, 2);
  CHECK(ref[1] - ref[0] > 1e-8);
  CHECK(it.eigenvalues[1] - it.eigenvalues[0] == doctest::Approx(ref[1] - ref[0]).epsilon(1e-6));
}

TEST_CASE("gauge shift leaves GP eigenvalues unchanged") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.5, 2.0 / 3.0);
  const auto g = grid_for(p, 65);
  const auto a = lowest_eigenpairs(HamiltonianOperator::build(HamiltonianKind::GP, p, g), 6);
  for (double shift : {0.3, -1.1, 2.0}) {
    const auto b = lowest_eigenpairs(HamiltonianOperator::build(HamiltonianKind::GP, p, g, {4, GpScheme::Peierls, shift}), 6);
    for (int k = 0; k < 6; ++k) CHECK(std::abs(a.eigenvalues[k] - b.eigenvalues[k]) < 1e-10);
  }
}

TEST_CASE("solver is deterministic for a seed") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.2, 0.3);
  const auto h = HamiltonianOperator::build(HamiltonianKind::GP, p, grid_for(p, 49));
  const auto a = lowest_eigenpairs(h, 4), b = lowest_eigenpairs(h, 4);
  CHECK(a.eigenvalues == b.eigenvalues);
  CHECK(a.eigenfields[2].values() == b.eigenfields[2].values());
}

TEST_CASE("uncoupled correlation diagram is straight lines") {
  const ModelParams p{1.0, 1.0, 4.0, 0.0, 0.0};
  const std::vector<double> deltas{0.1, 0.35, 0.6};
  const auto d = correlation_diagram(HamiltonianKind::Full, p, deltas, 6,
                                     [](const ModelParams& q) { return make_grid(q, 97, 97, default_padding(q)); });
  REQUIRE(d.rows.size() == 3);
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double dl = deltas[i];
    // Acceptor ladder -D/2 (1, 2, 2), donor ladder +D/2 (1, 2, 2), in order for D < 1.
    std::vector<double> expect{1 - dl / 2, 1 + dl / 2, 2 - dl / 2, 2 - dl / 2, 2 + dl / 2, 2 + dl / 2};
    for (int k = 0; k < 6; ++k) CHECK(std::abs(d.sorted_energies[i][k] - expect[k]) < 1e-4);
  }
  // Tracking follows each line: the slope of every column is +-1/2.
  for (int k = 0; k < 6; ++k) {
    const double slope = (d.rows[2].energies[k] - d.rows[0].energies[k]) / 0.5;
    CHECK(std::abs(std::abs(slope) - 0.5) < 1e-3);
  }
}

TEST_CASE("degeneracy grouping") {
  const auto g = group_degeneracies({1.0, 1.0 + 1e-9, 2.0, 3.0, 3.0 + 5e-7, 3.0 + 9e-7}, 1e-6);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == std::vector<int>{0, 1});
  CHECK(g[1] == std::vector<int>{2});
  CHECK(g[2] == std::vector<int>{3, 4, 5});
  CHECK(group_degeneracies({}, 1e-6).empty());
}

TEST_CASE("sampled minimum of a parabola is exact") {
  std::vector<double> x, y;
  for (int i = 0; i <= 20; ++i) {
    x.push_back(0.1 * i);
    y.push_back(3.0 * (0.1 * i - 1.234) * (0.1 * i - 1.234) + 0.5);
  }
  const auto m = sampled_minimum(x, y);
  CHECK(m.delta == doctest::Approx(1.234));
  CHECK(m.gap == doctest::Approx(0.5));
  y[3] = std::nan("");
  CHECK(sampled_minimum(x, y).delta == doctest::Approx(1.234));
}

TEST_CASE("solver argument checks") {
  const auto p = ModelParams::from_gamma(1.0, 1.0, 4.0, 0.2, 0.3);
  const auto h = HamiltonianOperator::build(HamiltonianKind::BO, p, make_grid(p, 32, 32, 3.0));
  CHECK_THROWS_AS(lowest_eigenpairs(h, 0), Error);
  EigenSolverOptions tight;
  tight.max_iter = 1;
  tight.tol = 1e-15;
  try {
    lowest_eigenpairs(h, 4, tight);
    FAIL("expected NOT_CONVERGED");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotConverged);
  }
}
