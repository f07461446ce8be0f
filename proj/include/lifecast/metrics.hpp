#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "lifecast/linalg.hpp"

namespace lifecast {

// Order-statistic quantile: rank (M-1)u with linear interpolation between the
// two nearest order statistics. `quantile_of_sorted` assumes ascending order.
double quantile_of_sorted(const Vec& sorted, double u);
double empirical_quantile(Vec samples, double u);

// u(x - xhat) when x >= xhat, else (1-u)(xhat - x).
double pinball(double x_true, double x_hat, double u);

// 99-point quantile approximation: mean pinball at u_j = j/100, j = 1..99.
double crps(const Vec& samples, double x_true);

// Dense quantile summary of per-step sample sets (levels j/100).
struct QuantileGrid {
  Vec levels;               // 99 levels
  std::vector<Vec> values;  // values[t][j], nondecreasing in j
};
QuantileGrid quantile_grid(const std::vector<Vec>& step_samples);

Vec median_path(const std::vector<Vec>& step_samples);

double mae(const Vec& forecast, const Vec& actual);
double rmse(const Vec& forecast, const Vec& actual);

// Classic DTW: absolute-difference cost, boundary-matched, no band constraint.
double dtw(const Vec& a, const Vec& b);

// Event-level scalars, both paths mapped through `inverse` first.
double peak_error(const Vec& forecast, const Vec& actual, const std::function<double(double)>& inverse);
double auc_error(const Vec& forecast, const Vec& actual, const std::function<double(double)>& inverse);

// Distributional launch summaries over rollouts (paths[r][t], inverse-
// transformed before per-rollout peak and cumulative sum).
struct LaunchSummary {
  double p50_auc = 0.0;
  double p90_peak = 0.0;
  double auc_bandwidth = 0.0;  // P90 - P10 of per-rollout AUC
};
LaunchSummary launch_summaries(const std::vector<Vec>& paths, const std::function<double(double)>& inverse);

// 2x2 median split of (potential = p50_auc, risk = auc_bandwidth);
// ties go to the low segment.
enum class Quadrant { LP_LR, LP_HR, HP_LR, HP_HR };
std::string to_string(Quadrant q);
std::vector<Quadrant> segment(const std::vector<LaunchSummary>& per_series);

struct BandScore {
  std::string label;
  double mae = 0.0;
  double mcrps = 0.0;
};

struct HorizonBand {
  std::size_t begin = 0;  // step indices [begin, end)
  std::size_t end = 0;
  std::string label;
};

// Full score card for one forecast window: step_samples[t] holds the M
// draws for step t, actual[t] the realization. MAE/RMSE/DTW use the median
// path; MCRPS averages crps over steps; peak/AUC use `inverse`.
struct WindowScore {
  double mae = 0.0;
  double rmse = 0.0;
  double mcrps = 0.0;
  double dtw = 0.0;
  double peak_err = 0.0;
  double auc_err = 0.0;
  Vec pinball_curve;  // mean pinball per level, 99 entries
  std::vector<BandScore> bands;
};
WindowScore score_window(const std::vector<Vec>& step_samples, const Vec& actual,
                         const std::function<double(double)>& inverse,
                         const std::vector<HorizonBand>& bands = {});

}  // namespace lifecast
