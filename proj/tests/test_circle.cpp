#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hyptimes/circle.hpp"
#include "hyptimes/compensated.hpp"

using namespace hyptimes;

TEST_CASE("wrap maps reals onto [-1, 1)") {
  CHECK(wrap(0.3).coord == 0.3);
  CHECK(wrap(1.5).coord == -0.5);
  CHECK(wrap(-1.25).coord == 0.75);
  CHECK(wrap(3.0).coord == -1.0);
  CHECK(wrap(1.0).coord == -1.0);
  CHECK(wrap(-1.0).coord == -1.0);
  CHECK(wrap(2.0).coord == 0.0);
  CHECK(wrap(-7.5).coord == 0.5);
  for (double x : {-9.99, -3.2, -0.25, 0.0, 0.125, 4.75, 123.4}) {
    double c = wrap(x).coord;
    CHECK(c >= -1.0);
    CHECK(c < 1.0);
    // wrapping shifts by an even integer
    double shift = x - c;
    CHECK(std::fabs(shift / 2.0 - std::round(shift / 2.0)) < 1e-12);
  }
}

TEST_CASE("wrap rejects non-finite input") {
  CHECK_THROWS_AS(wrap(std::numeric_limits<double>::infinity()), std::invalid_argument);
  CHECK_THROWS_AS(wrap(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
}

TEST_CASE("geodesic distance on the circumference-2 circle") {
  CHECK(geo_dist({0.0}, {0.5}) == 0.5);
  CHECK(geo_dist({0.9}, {-0.9}) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(geo_dist({-1.0}, {0.5}) == 0.5);
  CHECK(geo_dist({-1.0}, {0.9}) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(geo_dist({0.25}, {0.25}) == 0.0);
  for (double a : {-0.99, -0.5, 0.0, 0.33, 0.875}) {
    for (double b : {-0.75, -0.1, 0.2, 0.66}) {
      double d = geo_dist({a}, {b});
      CHECK(d == geo_dist({b}, {a}));
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
    }
  }
}

TEST_CASE("compensated sum recovers cancelled tails") {
  CompensatedSum s;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) s.add(0.1);
  CHECK(s.value() == doctest::Approx(100000.0).epsilon(1e-14));

  s.reset();
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1.0);
}
