#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "hyptimes/maps.hpp"

using namespace hyptimes;

TEST_CASE("intermittent map values on both branches") {
  const auto& f = intermittent_map();
  CHECK(f.eval({0.25}).coord == 0.0);
  CHECK(f.eval({0.0}).coord == -1.0);
  CHECK(f.eval({0.5625}).coord == 0.5);   // 2*0.75 - 1
  CHECK(f.eval({-0.25}).coord == 0.0);    // 1 - 2*0.5
  CHECK(f.eval({-0.5625}).coord == -0.5); // 1 - 2*0.75
  CHECK(f.eval({-1.0}).coord == -1.0);    // neutral fixed point
  CHECK(f.eval({1e-8}).coord == doctest::Approx(2e-4 - 1.0).epsilon(1e-12));
}

TEST_CASE("intermittent derivative observables") {
  const auto& f = intermittent_map();
  CHECK(f.log_inv_deriv_norm({0.25}) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  CHECK(f.log_inv_deriv_norm({-0.25}) == f.log_inv_deriv_norm({0.25}));
  CHECK(f.log_abs_det({0.25}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  // log|f'| = -(1/2) log|x|, finite difference cross-check
  for (double x : {0.1, 0.35, -0.6, 0.93, -0.91}) {
    double h = 1e-7;
    double fd = (f.eval({x + h}).coord - f.eval({x - h}).coord) / (2.0 * h);
    CHECK(std::log(std::fabs(fd)) ==
          doctest::Approx(f.log_abs_det({x})).epsilon(1e-6));
    CHECK(f.log_inv_deriv_norm({x}) == doctest::Approx(-f.log_abs_det({x})));
  }
}

TEST_CASE("intermittent exceptional set geometry") {
  const auto& f = intermittent_map();
  auto s = f.exceptional_set();
  REQUIRE(s.size() == 2);  // 0 and the single circle point +-1
  CHECK(f.dist_to_S({0.25}) == 0.25);
  CHECK(f.dist_to_S({0.75}) == 0.25);
  CHECK(f.dist_to_S({-0.5}) == 0.5);
  CHECK(f.dist_to_S({0.0}) == 0.0);
  CHECK(f.dist_to_S({-1.0}) == 0.0);
  for (double x : {-0.93, -0.4, 0.17, 0.88}) {
    CHECK(f.dist_to_S({x}) ==
          doctest::Approx(std::min(std::fabs(x), 1.0 - std::fabs(x))).epsilon(1e-15));
  }
}

TEST_CASE("inverse branches invert the map") {
  const auto& f = intermittent_map();
  auto [g1, g2] = f.inverse_branches({0.0});
  CHECK(g1.coord == 0.25);
  CHECK(g2.coord == -0.25);
  auto [h1, h2] = f.inverse_branches({0.5});
  CHECK(h1.coord == 0.5625);
  CHECK(h2.coord == -0.0625);
  double prev1 = -1.0, prev2 = -2.0;
  for (int i = 0; i < 200; ++i) {
    double x = -0.999 + 1.998 * i / 199.0;
    auto [a, b] = f.inverse_branches({x});
    CHECK(a.coord > 0.0);
    CHECK(a.coord < 1.0);
    CHECK(b.coord > -1.0);
    CHECK(b.coord < 0.0);
    CHECK(f.eval(a).coord == doctest::Approx(x).epsilon(1e-14));
    CHECK(f.eval(b).coord == doctest::Approx(x).epsilon(1e-14));
    CHECK(a.coord > prev1);  // both branches increasing
    CHECK(b.coord > prev2);
    prev1 = a.coord;
    prev2 = b.coord;
  }
  CHECK_THROWS_AS(f.inverse_branches({-1.0}), std::domain_error);
}

TEST_CASE("pullback follows the branch of the reference point") {
  const auto& f = intermittent_map();
  CHECK(f.pullback({0.0}, {0.7}).coord == 0.25);
  CHECK(f.pullback({0.0}, {-0.7}).coord == -0.25);

  const auto& d = doubling_map();
  CHECK(d.eval({0.3}).coord == 0.6);
  CHECK(d.eval({0.6}).coord == doctest::Approx(-0.8).epsilon(1e-15));
  CHECK(d.pullback({-0.8}, {0.5}).coord == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(d.pullback({-0.8}, {-0.5}).coord == doctest::Approx(-0.4).epsilon(1e-15));
  for (double y : {-0.9, -0.3, 0.0, 0.4, 0.95}) {
    for (double ref : {-0.6, 0.6}) {
      CirclePoint z = d.pullback({y}, {ref});
      CHECK(d.eval(z).coord == doctest::Approx(y).epsilon(1e-14));
      CHECK((z.coord >= 0.0) == (ref >= 0.0));
    }
  }
}

TEST_CASE("doubling baseline observables") {
  const auto& d = doubling_map();
  CHECK(d.exceptional_set().empty());
  CHECK(d.dist_to_S({0.37}) == 1.0);
  CHECK(d.log_inv_deriv_norm({0.37}) == doctest::Approx(-std::log(2.0)));
  CHECK(d.log_abs_det({0.37}) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("map_by_name resolves the catalog") {
  CHECK(map_by_name("intermittent").name() == "intermittent");
  CHECK(map_by_name("doubling").name() == "doubling");
  CHECK_THROWS_AS(map_by_name("unknown"), std::invalid_argument);
}

TEST_CASE("non-degeneracy probe recovers the half-power law") {
  auto est = probe_nondegeneracy(intermittent_map());
  CHECK(est.beta_hat > 0.45);
  CHECK(est.beta_hat < 0.55);
  CHECK(est.B_hat >= 1.0);
  CHECK(est.zeta_hat > 0.0);
  CHECK(est.zeta_hat < 0.51);
  CHECK(est.grid_points > 0);
  CHECK(est.residual_power_bounds >= 0.0);
  CHECK(est.residual_log_deriv_lip >= 0.0);
  CHECK(est.residual_log_det_lip >= 0.0);
  CHECK_THROWS_AS(probe_nondegeneracy(doubling_map()), std::invalid_argument);
}
