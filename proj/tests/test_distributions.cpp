#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fleetlife/distributions.hpp"

using namespace fleetlife;

namespace {

const LocationScaleParams kTable2MaNew = from_eta_beta(18.39, 5.83);

}  // namespace

TEST_CASE("weibull cdf closed-form points") {
  // t = eta is the standardized zero of the SEV base.
  CHECK(cdf(Family::weibull, kTable2MaNew, 18.39) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(cdf(Family::weibull, kTable2MaNew, 0.0) == 0.0);
  CHECK(cdf(Family::lognormal, LocationScaleParams{0.3, 0.7}, 0.0) == 0.0);
  // High-precision evaluation of 1 - exp(-(10/18.39)^5.83).
  CHECK(cdf(Family::weibull, kTable2MaNew, 10.0) ==
        doctest::Approx(0.0282668173876033082).epsilon(1e-12));
}

TEST_CASE("weibull identity: SEV form equals (eta,beta) form over six decades") {
  LocationScaleParams p = from_eta_beta(42.0, 3.1);
  double eta = 42.0, beta = 3.1;
  for (int i = 0; i <= 60; ++i) {
    double t = 42.0 * std::pow(10.0, -3.0 + 0.1 * i);
    double via_sev = cdf(Family::weibull, p, t);
    double via_eta = 1.0 - std::exp(-std::pow(t / eta, beta));
    CHECK(via_sev == doctest::Approx(via_eta).epsilon(1e-12));
  }
}

TEST_CASE("pdf closed-form points") {
  // Exponential special case: beta = 1, eta = 2.
  LocationScaleParams expo = from_eta_beta(2.0, 1.0);
  CHECK(pdf(Family::weibull, expo, 2.0) == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-12));
  // Standard lognormal at t = 1.
  LocationScaleParams stdln{0.0, 1.0};
  CHECK(pdf(Family::lognormal, stdln, 1.0) ==
        doctest::Approx(0.3989422804014326779).epsilon(1e-12));
  // (beta/eta) e^-1 at t = eta.
  CHECK(pdf(Family::weibull, kTable2MaNew, 18.39) ==
        doctest::Approx(0.1166251844496742107).epsilon(1e-12));
  CHECK_THROWS_AS(pdf(Family::weibull, expo, 0.0), std::domain_error);
}

TEST_CASE("pdf matches centered finite difference of cdf") {
  for (Family f : {Family::weibull, Family::lognormal}) {
    LocationScaleParams p = f == Family::weibull ? from_eta_beta(60.0, 2.4)
                                                 : LocationScaleParams{3.5, 0.8};
    for (double t : {5.0, 20.0, 45.0, 90.0, 150.0}) {
      double h = 1e-6 * t;
      double numeric = (cdf(f, p, t + h) - cdf(f, p, t - h)) / (2.0 * h);
      CHECK(pdf(f, p, t) == doctest::Approx(numeric).epsilon(1e-6));
    }
  }
}

TEST_CASE("quantile closed forms and round trip") {
  LocationScaleParams expo = from_eta_beta(2.0, 1.0);
  CHECK(quantile(Family::weibull, expo, 0.5) ==
        doctest::Approx(1.3862943611198906188).epsilon(1e-12));
  CHECK(quantile(Family::weibull, kTable2MaNew, 1.0 - std::exp(-1.0)) ==
        doctest::Approx(18.39).epsilon(1e-12));
  LocationScaleParams ln{1.7, 0.6};
  CHECK(quantile(Family::lognormal, ln, 0.5) == doctest::Approx(std::exp(1.7)).epsilon(1e-12));

  for (Family f : {Family::weibull, Family::lognormal}) {
    LocationScaleParams p = f == Family::weibull ? from_eta_beta(80.0, 1.7)
                                                 : LocationScaleParams{4.0, 1.1};
    // Log-spaced grid spanning six decades around the scale. Near p = 1
    // the probability's ulp no longer carries enough bits to invert to
    // 1e-8 relative, so those grid points are skipped.
    for (int i = 0; i <= 30; ++i) {
      double t = 80.0 * std::pow(10.0, -3.0 + 0.2 * i);
      double prob = cdf(f, p, t);
      if (prob <= 0.0 || prob >= 1.0 - 1e-8) continue;
      CHECK(quantile(f, p, prob) == doctest::Approx(t).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(quantile(Family::weibull, expo, 0.0), std::domain_error);
  CHECK_THROWS_AS(quantile(Family::weibull, expo, 1.0), std::domain_error);
}

TEST_CASE("quantile is strictly increasing in p") {
  LocationScaleParams p = from_eta_beta(30.0, 5.5);
  double prev = 0.0;
  for (double prob = 0.01; prob < 1.0; prob += 0.01) {
    double q = quantile(Family::weibull, p, prob);
    CHECK(q > prev);
    prev = q;
  }
}

TEST_CASE("hazard closed forms and monotonicity by shape") {
  LocationScaleParams expo = from_eta_beta(2.0, 1.0);
  for (double t : {0.5, 1.0, 3.0, 10.0}) {
    CHECK(hazard(Family::weibull, expo, t) == doctest::Approx(0.5).epsilon(1e-12));
  }
  LocationScaleParams w21 = from_eta_beta(1.0, 2.0);
  for (double t : {0.25, 1.0, 2.0}) {
    CHECK(hazard(Family::weibull, w21, t) == doctest::Approx(2.0 * t).epsilon(1e-10));
  }
  // Table 2 MD estimate: strongly decreasing hazard when beta < 1.
  LocationScaleParams md = from_eta_beta(136.81, 0.51);
  CHECK(hazard(Family::weibull, md, 10.0) > hazard(Family::weibull, md, 50.0));

  auto increasing_on_grid = [](const LocationScaleParams& p) {
    double prev = -1.0;
    bool inc = true;
    for (int i = 1; i <= 40; ++i) {
      double h = hazard(Family::weibull, p, 4.0 * i);
      if (prev >= 0.0 && h <= prev) inc = false;
      prev = h;
    }
    return inc;
  };
  CHECK(increasing_on_grid(from_eta_beta(100.0, 2.0)));
  CHECK_FALSE(increasing_on_grid(from_eta_beta(100.0, 0.6)));
}

TEST_CASE("conditional cdf basics") {
  ConditionalLife cl{Family::weibull, kTable2MaNew, 10.0};
  CHECK(conditional_cdf(cl, 10.0) == 0.0);
  CHECK(conditional_cdf(cl, 15.0) == doctest::Approx(0.2413282438838054).epsilon(1e-10));
  CHECK_THROWS_AS(conditional_cdf(cl, 9.0), std::domain_error);

  // Memorylessness of the exponential case: P(T <= 5+s | T > 5) = 1 - e^{-s/2}.
  ConditionalLife ecl{Family::weibull, from_eta_beta(2.0, 1.0), 5.0};
  for (double s : {0.1, 0.7, 2.0, 6.0}) {
    CHECK(conditional_cdf(ecl, 5.0 + s) ==
          doctest::Approx(1.0 - std::exp(-s / 2.0)).epsilon(1e-10));
  }

  // current_age = 0 reduces to the unconditional cdf exactly.
  ConditionalLife zero{Family::lognormal, LocationScaleParams{3.0, 0.9}, 0.0};
  for (double t : {1.0, 10.0, 40.0}) {
    CHECK(conditional_cdf(zero, t) == cdf(Family::lognormal, zero.params, t));
  }
}

TEST_CASE("conditional cdf is nondecreasing and reaches 1") {
  ConditionalLife cl{Family::lognormal, LocationScaleParams{3.2, 0.5}, 20.0};
  double prev = 0.0;
  for (double t = 20.0; t < 400.0; t += 5.0) {
    double v = conditional_cdf(cl, t);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(conditional_cdf(cl, 4000.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("conditional quantile inverts the conditional cdf") {
  ConditionalLife ecl{Family::weibull, from_eta_beta(2.0, 1.0), 5.0};
  CHECK(conditional_quantile(ecl, 0.05) == doctest::Approx(5.1025865887751011).epsilon(1e-10));
  CHECK(conditional_quantile(ecl, 0.95) == doctest::Approx(10.991464547107982).epsilon(1e-10));
  CHECK(conditional_quantile(ecl, 1e-12) == doctest::Approx(5.0).epsilon(1e-9));

  for (Family f : {Family::weibull, Family::lognormal}) {
    ConditionalLife cl{f, f == Family::weibull ? from_eta_beta(100.0, 2.0)
                                               : LocationScaleParams{4.6, 0.5},
                       35.0};
    for (double p : {0.01, 0.25, 0.5, 0.9, 0.999}) {
      double t = conditional_quantile(cl, p);
      CHECK(t >= cl.current_age);
      CHECK(conditional_cdf(cl, t) == doctest::Approx(p).epsilon(1e-10));
    }
  }
}

TEST_CASE("conditional quantile is nondecreasing in current age") {
  for (double p : {0.1, 0.5, 0.9}) {
    double prev = 0.0;
    for (double age = 0.0; age <= 60.0; age += 5.0) {
      ConditionalLife cl{Family::weibull, from_eta_beta(70.0, 2.5), age};
      double q = conditional_quantile(cl, p);
      CHECK(q >= prev - 1e-12);
      prev = q;
    }
  }
}

TEST_CASE("deep conditional tail does not cancel catastrophically") {
  // F(t_i) extremely close to 1; the survival-ratio route must stay exact.
  ConditionalLife cl{Family::weibull, from_eta_beta(20.0, 4.0), 60.0};
  double q = conditional_quantile(cl, 0.5);
  CHECK(q > 60.0);
  CHECK(conditional_cdf(cl, q) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(cdf(Family::weibull, LocationScaleParams{0.0, 0.0}, 1.0), std::domain_error);
  CHECK_THROWS_AS(cdf(Family::weibull, LocationScaleParams{0.0, -1.0}, 1.0), std::domain_error);
  CHECK_THROWS_AS(cdf(Family::weibull, from_eta_beta(2.0, 1.0), std::nan("")), std::domain_error);
  CHECK_THROWS_AS(from_eta_beta(-1.0, 2.0), std::domain_error);
}

TEST_CASE("standard normal quantile inverts the cdf") {
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-9}) {
    double z = std_normal_quantile(p);
    CHECK(std_normal_cdf(z) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK(std_normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
}
