#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "fleetlife/optimize.hpp"

using namespace fleetlife;

namespace {

double rosenbrock(const std::vector<double>& x) {
  double a = 1.0 - x[0];
  double b = x[1] - x[0] * x[0];
  return a * a + 100.0 * b * b;
}

std::vector<double> rosenbrock_grad(const std::vector<double>& x) {
  double b = x[1] - x[0] * x[0];
  return {-2.0 * (1.0 - x[0]) - 400.0 * x[0] * b, 200.0 * b};
}

}  // namespace

TEST_CASE("bfgs solves a quadratic") {
  auto f = [](const std::vector<double>& x) {
    return 3.0 * (x[0] - 1.0) * (x[0] - 1.0) + 0.5 * (x[1] + 2.0) * (x[1] + 2.0);
  };
  auto g = [](const std::vector<double>& x) {
    return std::vector<double>{6.0 * (x[0] - 1.0), x[1] + 2.0};
  };
  OptimResult r = minimize_bfgs(f, g, {10.0, 10.0});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.x[1] == doctest::Approx(-2.0).epsilon(1e-7));
}

TEST_CASE("combined minimizer handles rosenbrock from a poor start") {
  OptimResult r = minimize(rosenbrock, rosenbrock_grad, {-1.2, 1.0});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("restart at the optimum is a fixed point") {
  OptimResult first = minimize(rosenbrock, rosenbrock_grad, {-1.2, 1.0});
  OptimResult again = minimize(rosenbrock, rosenbrock_grad, first.x);
  CHECK(again.converged);
  CHECK(again.x == first.x);  // bitwise: converged before taking any step
}

TEST_CASE("nelder-mead alone finds a smooth minimum") {
  OptimResult r = minimize_nelder_mead(rosenbrock, {2.0, 2.0});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("non-finite regions are avoided") {
  // f is +inf left of x = 0; the line search must back off.
  auto f = [](const std::vector<double>& x) {
    if (x[0] <= 0.0) return std::numeric_limits<double>::infinity();
    return x[0] - std::log(x[0]);
  };
  auto g = [](const std::vector<double>& x) {
    return std::vector<double>{1.0 - 1.0 / x[0]};
  };
  OptimResult r = minimize(f, g, {5.0});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("deterministic across runs") {
  OptimResult a = minimize(rosenbrock, rosenbrock_grad, {0.3, -0.7});
  OptimResult b = minimize(rosenbrock, rosenbrock_grad, {0.3, -0.7});
  CHECK(a.x == b.x);
  CHECK(a.fval == b.fval);
  CHECK(a.iterations == b.iterations);
}
