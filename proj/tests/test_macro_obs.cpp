#include "macrolab/macro_obs.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace macrolab;

namespace {

HermitianOperator zz() { return HermitianOperator(kron(pauli_z().matrix(), pauli_z().matrix())); }

}  // namespace

TEST_CASE("mean of σ_z has the binomial spectrum") {
  const auto set = build_mean_observables(ObservableFamily::make({pauli_z()}), 2);
  CHECK(set.sites() == 5);
  CHECK(set.dim() == 32);
  const VectorXd ev = hermitian_eigenvalues(set.operators[0]);
  for (Index k = 0; k < ev.size(); ++k) {
    // Each eigenvalue is (2u - 5)/5 for an integer u.
    const double u = (5.0 * ev(k) + 5.0) / 2.0;
    CHECK(std::abs(u - std::round(u)) < 1e-12);
  }
  CHECK(ev(0) == doctest::Approx(-1.0));
  CHECK(ev(31) == doctest::Approx(1.0));
  CHECK(set.norm_bounds[0] == doctest::Approx(1.0));
}

TEST_CASE("commutator of means decays as 2/(2n+1) for (σ_x, σ_y)") {
  const auto family = ObservableFamily::make({pauli_x(), pauli_y()});
  const std::array<int, 4> ns{0, 1, 2, 3};
  const auto rows = commutator_decay_profile(family, ns);
  REQUIRE(rows.size() == ns.size());
  for (const auto& row : rows) CHECK(row.norm == doctest::Approx(2.0 / (2 * row.n + 1)).epsilon(1e-12));
}

TEST_CASE("family validation") {
  CHECK_THROWS_AS(ObservableFamily::make({}), InvalidInput);
  CHECK_THROWS_AS(ObservableFamily::make({pauli_z(), HermitianOperator::identity(3)}), InvalidInput);
  CHECK_THROWS_AS(build_mean_observables(ObservableFamily::make({pauli_z()}), -1), InvalidInput);
  CHECK_THROWS_AS(build_mean_observables(ObservableFamily::make({pauli_z()}), 7),
                  DimensionOverflow);
}

TEST_CASE("on-site interaction mean equals the one-site mean") {
  const std::array<Interaction, 1> phis{Interaction::on_site(pauli_x())};
  const auto via_phi = build_interaction_means(phis, 2);
  const auto direct = build_mean_observables(ObservableFamily::make({pauli_x()}), 2);
  CHECK((via_phi.operators[0].matrix() - direct.operators[0].matrix()).norm() < 1e-14);
}

TEST_CASE("nearest-neighbour interaction mean and norm") {
  const auto phi = Interaction::make(2, 2, {{2, zz()}});
  CHECK(interaction_norm(phi) == doctest::Approx(1.0));
  const std::array<Interaction, 1> phis{phi};
  const auto h = build_interaction_means(phis, 1);
  // Sites -1, 0, 1: bonds (-1,0) and (0,1) fit, the mean divides by 3.
  const MatrixXc id = MatrixXc::Identity(2, 2);
  const MatrixXc expected =
      (kron(zz().matrix(), id) + kron(id, zz().matrix())) / 3.0;
  CHECK((h.operators[0].matrix() - expected).norm() < 1e-14);
  CHECK_THROWS_AS(Interaction::make(2, 1, {{2, zz()}}), InvalidInput);
}

TEST_CASE("coarse-graining of σ_zσ_z with M = 2 matches the hand count") {
  const auto phi = Interaction::make(2, 2, {{2, zz()}});
  const std::array<Interaction, 1> phis{phi};
  const auto k = coarse_grain(phis, 2, 3);
  const auto h = build_interaction_means(phis, 3);
  // Blocks of 5 sites tile with step 5, so only the central one fits in 7 sites.
  CHECK(k.block_offsets == std::vector<int>{0});
  const double diff = operator_norm(k.operators[0] - h.operators[0]);
  CHECK(diff == doctest::Approx(18.0 / 35.0).epsilon(1e-12));
  const auto tails = coarse_grain_tail(phi, 2);
  CHECK(tails.max() == doctest::Approx(0.0));
  CHECK(diff <= tails.max() + coarse_grain_boundary_bound(phi, 2, 3) + 1e-12);
}

TEST_CASE("coarse-graining rejects blocks that do not fit") {
  const std::array<Interaction, 1> phis{Interaction::make(2, 2, {{2, zz()}})};
  CHECK_THROWS_AS(coarse_grain(phis, 0, 3), InvalidInput);
  CHECK_THROWS_AS(coarse_grain(phis, 4, 3), InvalidInput);
}

TEST_CASE("coarse-grained operators obey the reported bound for several M, n") {
  const auto phi = Interaction::make(2, 2, {{1, pauli_x() * 0.5}, {2, zz()}});
  const std::array<Interaction, 1> phis{phi};
  for (int M : {1, 2})
    for (int n : {M, M + 1, M + 2}) {
      const auto k = coarse_grain(phis, M, n);
      const auto h = build_interaction_means(phis, n);
      const double diff = operator_norm(k.operators[0] - h.operators[0]);
      const double bound = coarse_grain_tail(phi, M).max() + coarse_grain_boundary_bound(phi, M, n);
      CAPTURE(M);
      CAPTURE(n);
      CHECK(diff <= bound + 1e-12);
    }
}
