#include "lifecast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lifecast {

double quantile_of_sorted(const Vec& sorted, double u) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty samples");
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile: u must be in (0,1)");
  const double rank = (static_cast<double>(sorted.size()) - 1.0) * u;
  const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double empirical_quantile(Vec samples, double u) {
  std::sort(samples.begin(), samples.end());
  return quantile_of_sorted(samples, u);
}

double pinball(double x_true, double x_hat, double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("pinball: u must be in (0,1)");
  return x_true >= x_hat ? u * (x_true - x_hat) : (1.0 - u) * (x_hat - x_true);
}

double crps(const Vec& samples, double x_true) {
  Vec sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  double acc = 0.0;
  for (int j = 1; j <= 99; ++j) {
    const double u = j / 100.0;
    acc += pinball(x_true, quantile_of_sorted(sorted, u), u);
  }
  return acc / 99.0;
}

QuantileGrid quantile_grid(const std::vector<Vec>& step_samples) {
  QuantileGrid grid;
  grid.levels.resize(99);
  for (int j = 1; j <= 99; ++j) grid.levels[j - 1] = j / 100.0;
  grid.values.reserve(step_samples.size());
  for (const Vec& samples : step_samples) {
    Vec sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    Vec row(99);
    for (int j = 1; j <= 99; ++j) row[j - 1] = quantile_of_sorted(sorted, j / 100.0);
    grid.values.push_back(std::move(row));
  }
  return grid;
}

Vec median_path(const std::vector<Vec>& step_samples) {
  Vec path(step_samples.size());
  for (std::size_t t = 0; t < step_samples.size(); ++t)
    path[t] = empirical_quantile(step_samples[t], 0.5);
  return path;
}

namespace {

void require_same_length(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument(std::string(what) + ": series must be nonempty and equal length");
}

}  // namespace

double mae(const Vec& forecast, const Vec& actual) {
  require_same_length(forecast, actual, "mae");
  double acc = 0.0;
  for (std::size_t t = 0; t < forecast.size(); ++t) acc += std::abs(forecast[t] - actual[t]);
  return acc / static_cast<double>(forecast.size());
}

double rmse(const Vec& forecast, const Vec& actual) {
  require_same_length(forecast, actual, "rmse");
  double acc = 0.0;
  for (std::size_t t = 0; t < forecast.size(); ++t) {
    const double d = forecast[t] - actual[t];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(forecast.size()));
}

double dtw(const Vec& a, const Vec& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("dtw: empty series");
  const std::size_t n = a.size(), m = b.size();
  const double inf = std::numeric_limits<double>::infinity();
  // Rolling two-row DP over the (n+1) x (m+1) accumulated-cost table.
  Vec prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      const double cost = std::abs(a[i - 1] - b[j - 1]);
      cur[j] = cost + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

namespace {

Vec apply_inverse(const Vec& v, const std::function<double(double)>& inverse) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = inverse ? inverse(v[i]) : v[i];
  return out;
}

}  // namespace

double peak_error(const Vec& forecast, const Vec& actual, const std::function<double(double)>& inverse) {
  require_same_length(forecast, actual, "peak_error");
  const Vec f = apply_inverse(forecast, inverse);
  const Vec a = apply_inverse(actual, inverse);
  return std::abs(*std::max_element(f.begin(), f.end()) - *std::max_element(a.begin(), a.end()));
}

double auc_error(const Vec& forecast, const Vec& actual, const std::function<double(double)>& inverse) {
  require_same_length(forecast, actual, "auc_error");
  double sf = 0.0, sa = 0.0;
  for (double v : forecast) sf += inverse ? inverse(v) : v;
  for (double v : actual) sa += inverse ? inverse(v) : v;
  return std::abs(sf - sa);
}

LaunchSummary launch_summaries(const std::vector<Vec>& paths, const std::function<double(double)>& inverse) {
  if (paths.empty()) throw std::invalid_argument("launch_summaries: no rollouts");
  Vec aucs(paths.size()), peaks(paths.size());
  for (std::size_t r = 0; r < paths.size(); ++r) {
    if (paths[r].empty()) throw std::invalid_argument("launch_summaries: empty rollout");
    const Vec raw = apply_inverse(paths[r], inverse);
    double s = 0.0;
    for (double v : raw) s += v;
    aucs[r] = s;
    peaks[r] = *std::max_element(raw.begin(), raw.end());
  }
  LaunchSummary out;
  if (paths.size() == 1) {
    out.p50_auc = aucs[0];
    out.p90_peak = peaks[0];
    out.auc_bandwidth = 0.0;
  } else {
    out.p50_auc = empirical_quantile(aucs, 0.5);
    out.p90_peak = empirical_quantile(peaks, 0.9);
    out.auc_bandwidth = empirical_quantile(aucs, 0.9) - empirical_quantile(aucs, 0.1);
  }
  return out;
}

std::string to_string(Quadrant q) {
  switch (q) {
    case Quadrant::LP_LR: return "LP-LR";
    case Quadrant::LP_HR: return "LP-HR";
    case Quadrant::HP_LR: return "HP-LR";
    case Quadrant::HP_HR: return "HP-HR";
  }
  return "?";
}

std::vector<Quadrant> segment(const std::vector<LaunchSummary>& per_series) {
  std::vector<Quadrant> labels(per_series.size(), Quadrant::LP_LR);
  if (per_series.empty()) return labels;
  Vec pot(per_series.size()), risk(per_series.size());
  for (std::size_t i = 0; i < per_series.size(); ++i) {
    pot[i] = per_series[i].p50_auc;
    risk[i] = per_series[i].auc_bandwidth;
  }
  const double pot_med = per_series.size() == 1 ? pot[0] : empirical_quantile(pot, 0.5);
  const double risk_med = per_series.size() == 1 ? risk[0] : empirical_quantile(risk, 0.5);
  for (std::size_t i = 0; i < per_series.size(); ++i) {
    const bool hp = pot[i] > pot_med;   // ties -> low potential
    const bool hr = risk[i] > risk_med; // ties -> low risk
    labels[i] = hp ? (hr ? Quadrant::HP_HR : Quadrant::HP_LR)
                   : (hr ? Quadrant::LP_HR : Quadrant::LP_LR);
  }
  return labels;
}

WindowScore score_window(const std::vector<Vec>& step_samples, const Vec& actual,
                         const std::function<double(double)>& inverse,
                         const std::vector<HorizonBand>& bands) {
  if (step_samples.size() != actual.size() || actual.empty())
    throw std::invalid_argument("score_window: samples/actual length mismatch");

  WindowScore ws;
  const Vec med = median_path(step_samples);
  ws.mae = mae(med, actual);
  ws.rmse = rmse(med, actual);
  ws.dtw = dtw(med, actual);
  ws.peak_err = peak_error(med, actual, inverse);
  ws.auc_err = auc_error(med, actual, inverse);

  ws.pinball_curve.assign(99, 0.0);
  double crps_acc = 0.0;
  std::vector<double> step_crps(actual.size(), 0.0);
  for (std::size_t t = 0; t < actual.size(); ++t) {
    Vec sorted = step_samples[t];
    std::sort(sorted.begin(), sorted.end());
    double acc = 0.0;
    for (int j = 1; j <= 99; ++j) {
      const double u = j / 100.0;
      const double loss = pinball(actual[t], quantile_of_sorted(sorted, u), u);
      ws.pinball_curve[j - 1] += loss / static_cast<double>(actual.size());
      acc += loss;
    }
    step_crps[t] = acc / 99.0;
    crps_acc += step_crps[t];
  }
  ws.mcrps = crps_acc / static_cast<double>(actual.size());

  for (const HorizonBand& band : bands) {
    if (band.begin >= band.end || band.end > actual.size()) continue;  // band beyond this window
    BandScore bs;
    bs.label = band.label;
    const std::size_t n = band.end - band.begin;
    double mae_acc = 0.0, crps_band = 0.0;
    for (std::size_t t = band.begin; t < band.end; ++t) {
      mae_acc += std::abs(med[t] - actual[t]);
      crps_band += step_crps[t];
    }
    bs.mae = mae_acc / static_cast<double>(n);
    bs.mcrps = crps_band / static_cast<double>(n);
    ws.bands.push_back(std::move(bs));
  }
  return ws;
}

}  // namespace lifecast
