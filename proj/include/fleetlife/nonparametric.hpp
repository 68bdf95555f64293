#pragma once

#include <string>
#include <vector>

#include "fleetlife/data.hpp"
#include "fleetlife/distributions.hpp"

namespace fleetlife {

/// Product-limit estimate over the LTRC risk set. Jumps exist only at
/// observed failure ages.
struct StepEstimate {
  std::vector<double> jump_times;     // increasing failure ages
  std::vector<double> cdf_values;     // value of the cdf at/after each jump
  std::vector<int> risk_counts;       // n_j at each jump
  std::vector<int> failure_counts;    // d_j at each jump
  std::vector<std::string> warnings;  // all-censored, all-truncated diagnostics

  double cdf_at(double age) const;  // right-continuous step lookup
};

/// Risk-set-adjusted product-limit estimator: a unit is at risk at age a
/// when it has entered (nu=1, or tau_L < a) and its outcome age is >= a.
/// Reduces to Kaplan-Meier exactly when nothing is truncated.
StepEstimate ltrc_product_limit(const std::vector<LifetimeObservation>& obs);

struct PlotPoint {
  double age = 0.0;
  double x = 0.0;  // log age
  double p = 0.0;  // step-midpoint plotting probability
  double y = 0.0;  // standardized quantile of p under the family
};

struct PlotPoints {
  std::vector<PlotPoint> points;
  std::vector<std::string> notes;  // dropped degenerate midpoints
};

/// One point per failure age, plotted at the midpoint of the cdf step;
/// censored units contribute no points.
PlotPoints plot_points(const StepEstimate& est, Family family);

/// Least-squares line y = a + b x through plot points; slope estimates
/// 1/sigma. Returns false when fewer than two distinct x values exist.
bool plot_line(const PlotPoints& pts, double& intercept, double& slope);

std::string write_step_estimate_csv(const StepEstimate& est);
std::string write_plot_points_csv(const PlotPoints& pts);

}  // namespace fleetlife
