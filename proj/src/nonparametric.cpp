#include "fleetlife/nonparametric.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "fleetlife/util.hpp"

namespace fleetlife {

double StepEstimate::cdf_at(double age) const {
  double v = 0.0;
  for (size_t j = 0; j < jump_times.size(); ++j) {
    if (jump_times[j] <= age) v = cdf_values[j];
    else break;
  }
  return v;
}

StepEstimate ltrc_product_limit(const std::vector<LifetimeObservation>& obs) {
  if (obs.empty()) throw DataError("product-limit estimator needs at least one observation");
  StepEstimate est;

  std::map<double, int> failures;  // age -> tie count
  bool any_untruncated = false;
  for (const auto& o : obs) {
    if (o.delta == 1) failures[o.age] += 1;
    if (o.nu == 1) any_untruncated = true;
  }
  if (failures.empty()) {
    est.warnings.push_back("all observations censored: estimate is flat at 0");
    return est;
  }
  if (!any_untruncated) {
    est.warnings.push_back(
        "every observation is left-truncated: the product-limit estimate is not consistent");
  }

  double surv = 1.0;
  for (const auto& [age, d] : failures) {
    int n = 0;
    for (const auto& o : obs) {
      bool entered = o.nu == 1 || o.tau_L < age;  // strict entry after tau_L
      if (entered && o.age >= age) ++n;
    }
    surv *= 1.0 - double(d) / double(n);
    est.jump_times.push_back(age);
    est.failure_counts.push_back(d);
    est.risk_counts.push_back(n);
    est.cdf_values.push_back(1.0 - surv);
  }
  return est;
}

PlotPoints plot_points(const StepEstimate& est, Family family) {
  if (est.jump_times.empty()) throw DataError("plot points need at least one cdf jump");
  PlotPoints out;
  double prev = 0.0;
  for (size_t j = 0; j < est.jump_times.size(); ++j) {
    double mid = 0.5 * (prev + est.cdf_values[j]);
    prev = est.cdf_values[j];
    if (!(mid > 0.0) || !(mid < 1.0)) {
      out.notes.push_back("midpoint probability at age " + format_double(est.jump_times[j]) +
                          " is degenerate; point dropped");
      continue;
    }
    PlotPoint pt;
    pt.age = est.jump_times[j];
    pt.x = std::log(pt.age);
    pt.p = mid;
    pt.y = family == Family::weibull ? std_sev_quantile(mid) : std_normal_quantile(mid);
    out.points.push_back(pt);
  }
  return out;
}

bool plot_line(const PlotPoints& pts, double& intercept, double& slope) {
  const auto& v = pts.points;
  if (v.size() < 2) return false;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : v) {
    sx += p.x;
    sy += p.y;
    sxx += p.x * p.x;
    sxy += p.x * p.y;
  }
  double n = double(v.size());
  double denom = n * sxx - sx * sx;
  if (std::fabs(denom) < 1e-12 * n * std::max(1.0, sxx)) return false;
  slope = (n * sxy - sx * sy) / denom;
  intercept = (sy - slope * sx) / n;
  return true;
}

std::string write_step_estimate_csv(const StepEstimate& est) {
  std::ostringstream out;
  out << "age,cdf,risk,failures\n";
  for (size_t j = 0; j < est.jump_times.size(); ++j) {
    out << format_double(est.jump_times[j]) << ',' << format_double(est.cdf_values[j]) << ','
        << est.risk_counts[j] << ',' << est.failure_counts[j] << "\n";
  }
  return out.str();
}

std::string write_plot_points_csv(const PlotPoints& pts) {
  std::ostringstream out;
  out << "age,log_age,prob_midpoint,standardized_quantile\n";
  for (const auto& p : pts.points) {
    out << format_double(p.age) << ',' << format_double(p.x) << ',' << format_double(p.p) << ','
        << format_double(p.y) << "\n";
  }
  return out.str();
}

}  // namespace fleetlife
