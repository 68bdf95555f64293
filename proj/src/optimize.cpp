#include "fleetlife/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fleetlife {

namespace {

constexpr double kHuge = 1e300;

double sanitize(double v) { return std::isfinite(v) ? v : kHuge; }

double scaled_grad_norm(const std::vector<double>& g, const std::vector<double>& x, double f) {
  double m = 0.0;
  for (size_t j = 0; j < g.size(); ++j) {
    m = std::max(m, std::fabs(g[j]) * (1.0 + std::fabs(x[j])));
  }
  return m / (1.0 + std::fabs(f));
}

}  // namespace

OptimResult minimize_bfgs(const ObjectiveFn& f, const GradientFn& g, std::vector<double> x0,
                          const OptimOptions& opts) {
  const size_t p = x0.size();
  OptimResult res;
  res.x = std::move(x0);
  res.fval = sanitize(f(res.x));
  res.evaluations = 1;
  if (res.fval >= kHuge) {
    res.message = "objective not finite at the starting point";
    return res;
  }
  std::vector<double> grad = g(res.x);

  // Inverse-Hessian approximation, identity start.
  std::vector<double> H(p * p, 0.0);
  for (size_t i = 0; i < p; ++i) H[i * p + i] = 1.0;

  std::vector<double> dir(p), x_new(p), grad_new(p), s(p), y(p), Hy(p);
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    res.iterations = iter;
    if (scaled_grad_norm(grad, res.x, res.fval) < opts.scaled_grad_tol) {
      res.converged = true;
      return res;
    }
    // dir = -H * grad
    for (size_t i = 0; i < p; ++i) {
      double acc = 0.0;
      for (size_t j = 0; j < p; ++j) acc += H[i * p + j] * grad[j];
      dir[i] = -acc;
    }
    double slope = std::inner_product(dir.begin(), dir.end(), grad.begin(), 0.0);
    if (!(slope < 0.0)) {
      // Not a descent direction: reset to steepest descent.
      std::fill(H.begin(), H.end(), 0.0);
      for (size_t i = 0; i < p; ++i) H[i * p + i] = 1.0;
      for (size_t i = 0; i < p; ++i) dir[i] = -grad[i];
      slope = -std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0);
      if (!(slope < 0.0)) {
        res.converged = true;  // zero gradient
        return res;
      }
    }

    // Backtracking Armijo line search.
    double step = 1.0;
    double f_new = kHuge;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (size_t i = 0; i < p; ++i) x_new[i] = res.x[i] + step * dir[i];
      f_new = sanitize(f(x_new));
      ++res.evaluations;
      if (f_new <= res.fval + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.message = "line search failed";
      return res;
    }

    grad_new = g(x_new);
    for (size_t i = 0; i < p; ++i) {
      s[i] = x_new[i] - res.x[i];
      y[i] = grad_new[i] - grad[i];
    }
    double f_old = res.fval;
    res.x = x_new;
    res.fval = f_new;
    grad = grad_new;

    double rel_change = std::fabs(f_old - f_new) / (1.0 + std::fabs(f_new));
    if (rel_change < opts.rel_f_tol &&
        scaled_grad_norm(grad, res.x, res.fval) < opts.scaled_grad_tol) {
      res.converged = true;
      res.iterations = iter + 1;
      return res;
    }

    double sy = std::inner_product(s.begin(), s.end(), y.begin(), 0.0);
    double ss = std::inner_product(s.begin(), s.end(), s.begin(), 0.0);
    double yy = std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
    if (sy > 1e-10 * std::sqrt(ss * yy)) {
      // BFGS inverse update: H += (1 + y'Hy/sy) ss'/sy - (Hys' + sy'H)/sy
      for (size_t i = 0; i < p; ++i) {
        double acc = 0.0;
        for (size_t j = 0; j < p; ++j) acc += H[i * p + j] * y[j];
        Hy[i] = acc;
      }
      double yHy = std::inner_product(y.begin(), y.end(), Hy.begin(), 0.0);
      double c = (1.0 + yHy / sy) / sy;
      for (size_t i = 0; i < p; ++i) {
        for (size_t j = 0; j < p; ++j) {
          H[i * p + j] += c * s[i] * s[j] - (Hy[i] * s[j] + s[i] * Hy[j]) / sy;
        }
      }
    }
  }
  res.message = "iteration limit reached";
  return res;
}

OptimResult minimize_nelder_mead(const ObjectiveFn& f, std::vector<double> x0, int max_iterations) {
  const size_t p = x0.size();
  if (max_iterations <= 0) max_iterations = int(2000 * std::max<size_t>(p, 1));
  OptimResult res;
  res.x = x0;

  std::vector<std::vector<double>> simplex(p + 1, x0);
  std::vector<double> fv(p + 1);
  for (size_t j = 0; j < p; ++j) simplex[j + 1][j] += 0.1 * (1.0 + std::fabs(x0[j]));
  for (size_t v = 0; v <= p; ++v) fv[v] = sanitize(f(simplex[v]));
  res.evaluations = int(p) + 1;

  std::vector<size_t> order(p + 1);
  std::vector<double> centroid(p), xr(p), xe(p), xc(p);
  const double alpha = 1.0, gamma = 2.0, rho = 0.5, shrink = 0.5;

  for (int iter = 0; iter < max_iterations; ++iter) {
    res.iterations = iter;
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return fv[a] != fv[b] ? fv[a] < fv[b] : a < b;
    });
    size_t best = order[0], worst = order[p];

    double fspread = std::fabs(fv[worst] - fv[best]);
    double xspread = 0.0;
    for (size_t j = 0; j < p; ++j) {
      xspread = std::max(xspread, std::fabs(simplex[worst][j] - simplex[best][j]));
    }
    if (fspread <= 1e-12 * (1.0 + std::fabs(fv[best])) && xspread <= 1e-9) {
      res.x = simplex[best];
      res.fval = fv[best];
      res.converged = true;
      return res;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (size_t v = 0; v <= p; ++v) {
      if (v == worst) continue;
      for (size_t j = 0; j < p; ++j) centroid[j] += simplex[v][j];
    }
    for (size_t j = 0; j < p; ++j) centroid[j] /= double(p);

    for (size_t j = 0; j < p; ++j) xr[j] = centroid[j] + alpha * (centroid[j] - simplex[worst][j]);
    double fr = sanitize(f(xr));
    ++res.evaluations;
    if (fr < fv[best]) {
      for (size_t j = 0; j < p; ++j) xe[j] = centroid[j] + gamma * (xr[j] - centroid[j]);
      double fe = sanitize(f(xe));
      ++res.evaluations;
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[order[p - 1]]) {
      simplex[worst] = xr;
      fv[worst] = fr;
    } else {
      for (size_t j = 0; j < p; ++j) xc[j] = centroid[j] + rho * (simplex[worst][j] - centroid[j]);
      double fc = sanitize(f(xc));
      ++res.evaluations;
      if (fc < fv[worst]) {
        simplex[worst] = xc;
        fv[worst] = fc;
      } else {
        for (size_t v = 0; v <= p; ++v) {
          if (v == best) continue;
          for (size_t j = 0; j < p; ++j) {
            simplex[v][j] = simplex[best][j] + shrink * (simplex[v][j] - simplex[best][j]);
          }
          fv[v] = sanitize(f(simplex[v]));
        }
        res.evaluations += int(p);
      }
    }
  }
  std::iota(order.begin(), order.end(), size_t{0});
  auto best = *std::min_element(order.begin(), order.end(),
                                [&](size_t a, size_t b) { return fv[a] < fv[b]; });
  res.x = simplex[best];
  res.fval = fv[best];
  res.message = "simplex iteration limit reached";
  return res;
}

OptimResult minimize(const ObjectiveFn& f, const GradientFn& g, std::vector<double> x0,
                     const OptimOptions& opts) {
  OptimResult first = minimize_bfgs(f, g, x0, opts);
  if (first.converged) return first;
  // Derivative-free rescue from wherever BFGS stalled, then polish.
  OptimResult nm = minimize_nelder_mead(f, first.fval < kHuge ? first.x : x0);
  OptimResult second = minimize_bfgs(f, g, nm.x, opts);
  second.evaluations += first.evaluations + nm.evaluations;
  second.iterations += first.iterations + nm.iterations;
  if (!second.converged && nm.fval < second.fval) {
    nm.evaluations = second.evaluations;
    nm.iterations = second.iterations;
    nm.message = "BFGS stalled; simplex result retained (" + second.message + ")";
    return nm;
  }
  return second;
}

}  // namespace fleetlife
