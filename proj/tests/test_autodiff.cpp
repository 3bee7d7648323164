#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "resopt/autodiff.hpp"
#include "resopt/gradcheck.hpp"
#include "resopt/losses.hpp"

using namespace resopt;

TEST_CASE("primitive forward values and local partials") {
  tape t;

  SECTION("logistic gradient at 0 is 0.25") {
    var x = t.leaf(0.0);
    var y = logistic(x);
    t.backward(y);
    REQUIRE(y.value() == Catch::Approx(0.5));
    REQUIRE(x.grad() == Catch::Approx(0.25));
  }

  SECTION("max_const is flat below the constant") {
    var x = t.leaf(-1.0);
    var y = max_const(x, 0.5);
    t.backward(y);
    REQUIRE(y.value() == 0.5);
    REQUIRE(x.grad() == 0.0);
  }

  SECTION("max_const passes gradient above the constant") {
    var x = t.leaf(2.0);
    var y = max_const(x, 0.5);
    t.backward(y);
    REQUIRE(y.value() == 2.0);
    REQUIRE(x.grad() == 1.0);
  }

  SECTION("exp(log(x)) has unit gradient") {
    var x = t.leaf(3.0);
    var y = exp(log(x));
    t.backward(y);
    REQUIRE(y.value() == Catch::Approx(3.0));
    REQUIRE(x.grad() == Catch::Approx(1.0));
  }

  SECTION("product rule") {
    var x = t.leaf(2.0);
    var y = t.leaf(3.0);
    var z = x * y;
    t.backward(z);
    REQUIRE(x.grad() == 3.0);
    REQUIRE(y.grad() == 2.0);
  }

  SECTION("mean of n copies of x has gradient 1") {
    var x = t.leaf(7.0);
    std::vector<var> copies(5, x);
    var m = mean(copies);
    t.backward(m);
    REQUIRE(m.value() == Catch::Approx(7.0));
    REQUIRE(x.grad() == Catch::Approx(1.0));
  }

  SECTION("clamp is flat outside the interval") {
    var x = t.leaf(2.0);
    var y = clamp(x, 0.0, 1.0);
    t.backward(y);
    REQUIRE(y.value() == 1.0);
    REQUIRE(x.grad() == 0.0);
  }

  SECTION("log of non-positive throws") {
    var x = t.leaf(-1.0);
    REQUIRE_THROWS_AS(log(x), domain_error);
  }
}

TEST_CASE("backward accumulates across calls and zero_grads resets") {
  tape t;
  var x = t.leaf(2.0);
  var y = x * x;
  t.backward(y);
  REQUIRE(x.grad() == Catch::Approx(4.0));
  t.backward(y);
  REQUIRE(x.grad() == Catch::Approx(8.0));  // documented accumulate semantics
  t.zero_grads();
  t.backward(y);
  REQUIRE(x.grad() == Catch::Approx(4.0));
}

TEST_CASE("tape reset and rewind reclaim nodes") {
  tape t;
  var x = t.leaf(1.0);
  const std::size_t mark = t.mark();
  var y = exp(x) * 2.0 + 1.0;
  REQUIRE(t.size() > mark);
  REQUIRE(y.value() == Catch::Approx(2.0 * std::exp(1.0) + 1.0));
  t.rewind(mark);
  REQUIRE(t.size() == mark);
  t.reset();
  REQUIRE(t.size() == 0);
}

TEST_CASE("mixed scalar arithmetic matches plain evaluation") {
  tape t;
  var x = t.leaf(0.7);
  var y = (2.0 - x) / (x + 1.0) * 3.0 - 0.5;
  const double expected = (2.0 - 0.7) / (0.7 + 1.0) * 3.0 - 0.5;
  REQUIRE(y.value() == Catch::Approx(expected).epsilon(1e-14));
  t.backward(y);
  const double h = 1e-6;
  const double fd = (((2.0 - (0.7 + h)) / ((0.7 + h) + 1.0) * 3.0 - 0.5) -
                     ((2.0 - (0.7 - h)) / ((0.7 - h) + 1.0) * 3.0 - 0.5)) /
                    (2.0 * h);
  REQUIRE(x.grad() == Catch::Approx(fd).epsilon(1e-7));
}

TEST_CASE("check_gradients on simple functions") {
  SECTION("quadratic") {
    const tape_function f = [](tape&, std::span<const var> xs) { return xs[0] * xs[0]; };
    const double point[1] = {3.0};
    const auto r = check_gradients(f, point, 1e-5, 1e-8);
    REQUIRE(r.pass);
    REQUIRE(r.analytic[0] == Catch::Approx(6.0));
    REQUIRE(r.numeric[0] == Catch::Approx(6.0).margin(1e-9));
  }

  SECTION("bce of logistic") {
    const tape_function f = [](tape&, std::span<const var> xs) {
      return bce(0.3, logistic(xs[0]));
    };
    const double point[1] = {0.1};
    const auto r = check_gradients(f, point, 1e-5, 1e-6);
    REQUIRE(r.pass);
    REQUIRE(r.max_rel_error < 1e-6);
  }

  SECTION("multivariate composite") {
    const tape_function f = [](tape&, std::span<const var> xs) {
      return exp(xs[0] * 0.5) * logistic(xs[1]) + abs(xs[2] - 0.3) * xs[0];
    };
    const std::vector<double> point{0.4, -0.8, 1.1};
    const auto r = check_gradients(f, point, 1e-5, 1e-6);
    REQUIRE(r.pass);
  }
}

TEST_CASE("scale loss graph gradient matches finite differences") {
  scale_config sc;
  boundaries b{0.05, 0.3};
  const tape_function f = [=](tape&, std::span<const var> xs) {
    var phi = clamp_scale_factor(xs[0], sc);
    return scale_loss_object(120.0, 90.0, phi, b, sc, 600.0 * 1000.0,
                             default_steepness);
  };
  for (double phi_raw : {-1.2, -0.3, 0.5, 1.4}) {
    const double point[1] = {phi_raw};
    const auto r = check_gradients(f, point, 1e-5, 1e-4);
    INFO("phi_raw = " << phi_raw);
    REQUIRE(r.pass);
  }
}
