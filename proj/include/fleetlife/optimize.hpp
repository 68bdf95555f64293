#pragma once

#include <functional>
#include <string>
#include <vector>

namespace fleetlife {

using ObjectiveFn = std::function<double(const std::vector<double>&)>;
using GradientFn = std::function<std::vector<double>(const std::vector<double>&)>;

struct OptimOptions {
  int max_iterations = 500;
  double rel_f_tol = 1e-10;       // relative objective change
  double scaled_grad_tol = 1e-6;  // max_j |g_j| (1+|x_j|) / (1+|f|)
};

struct OptimResult {
  std::vector<double> x;
  double fval = 0.0;
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  std::string message;
};

/// BFGS with backtracking line search. Deterministic.
OptimResult minimize_bfgs(const ObjectiveFn& f, const GradientFn& g, std::vector<double> x0,
                          const OptimOptions& opts = {});

/// Nelder-Mead simplex, derivative-free. Deterministic.
OptimResult minimize_nelder_mead(const ObjectiveFn& f, std::vector<double> x0, int max_iterations = 0);

/// BFGS first; on line-search failure restart from a Nelder-Mead solution
/// and polish with BFGS again.
OptimResult minimize(const ObjectiveFn& f, const GradientFn& g, std::vector<double> x0,
                     const OptimOptions& opts = {});

}  // namespace fleetlife
