#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "lifecast/metrics.hpp"

using namespace lifecast;

namespace {

// Plain recursive DTW with memoization -- an independent route against the
// rolling-array implementation.
double dtw_reference(const Vec& a, const Vec& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<double>> memo(n, std::vector<double>(m, -1.0));
  auto rec = [&](auto&& self, std::size_t i, std::size_t j) -> double {
    const double cost = std::abs(a[i] - b[j]);
    if (i == 0 && j == 0) return cost;
    if (memo[i][j] >= 0.0) return memo[i][j];
    double best = std::numeric_limits<double>::infinity();
    if (i > 0) best = std::min(best, self(self, i - 1, j));
    if (j > 0) best = std::min(best, self(self, i, j - 1));
    if (i > 0 && j > 0) best = std::min(best, self(self, i - 1, j - 1));
    return memo[i][j] = cost + best;
  };
  return rec(rec, n - 1, m - 1);
}

}  // namespace

TEST_CASE("order-statistic quantiles against direct enumeration") {
  const Vec sorted{1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(quantile_of_sorted(sorted, 0.5) == doctest::Approx(3.0));
  CHECK(quantile_of_sorted(sorted, 0.25) == doctest::Approx(2.0));
  CHECK(quantile_of_sorted(sorted, 0.1) == doctest::Approx(1.4));
  CHECK(quantile_of_sorted(sorted, 0.99) == doctest::Approx(4.96));

  // Random sets: rank (M-1)u with linear interpolation, recomputed inline.
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  Vec samples(11);
  for (double& v : samples) v = unif(gen);
  Vec s = samples;
  std::sort(s.begin(), s.end());
  for (int j = 1; j <= 99; ++j) {
    const double u = j / 100.0;
    const double rank = 10.0 * u;
    const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    const double want = s[lo] + (rank - std::floor(rank)) * (s[std::min<std::size_t>(lo + 1, 10)] - s[lo]);
    CHECK(empirical_quantile(samples, u) == doctest::Approx(want).epsilon(1e-12));
  }

  // Quantiles are nondecreasing in u.
  double prev = quantile_of_sorted(s, 0.01);
  for (int j = 2; j <= 99; ++j) {
    const double q = quantile_of_sorted(s, j / 100.0);
    CHECK(q >= prev);
    prev = q;
  }

  CHECK_THROWS_AS(quantile_of_sorted({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(quantile_of_sorted(sorted, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(quantile_of_sorted(sorted, 1.0), std::invalid_argument);
}

TEST_CASE("pinball loss arithmetic") {
  CHECK(pinball(2.0, 1.0, 0.3) == doctest::Approx(0.3));        // under-forecast
  CHECK(pinball(1.0, 2.0, 0.3) == doctest::Approx(0.7));        // over-forecast
  CHECK(pinball(1.5, 1.5, 0.9) == doctest::Approx(0.0));
  CHECK_THROWS_AS(pinball(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("CRPS is the mean pinball over the 99-point quantile grid") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd(0.2, 0.8);
  Vec samples(257);
  for (double& v : samples) v = nd(gen);
  const double x = -0.1;
  Vec s = samples;
  std::sort(s.begin(), s.end());
  double want = 0.0;
  for (int j = 1; j <= 99; ++j)
    want += pinball(x, quantile_of_sorted(s, j / 100.0), j / 100.0);
  want /= 99.0;
  CHECK(crps(samples, x) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("CRPS agrees with the pairwise energy form within two percent") {
  std::mt19937_64 gen(13);
  std::normal_distribution<double> nd(0.4, 1.3);
  const std::size_t m = 1000;
  Vec samples(m);
  for (double& v : samples) v = nd(gen);
  const double x = 0.3;

  double e_abs = 0.0;
  for (double v : samples) e_abs += std::abs(v - x);
  e_abs /= static_cast<double>(m);
  double e_pair = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) e_pair += std::abs(samples[i] - samples[j]);
  e_pair /= static_cast<double>(m) * static_cast<double>(m);
  const double pairwise = e_abs - 0.5 * e_pair;

  // The energy form equals twice the mean pinball loss, so the two routes
  // meet at a factor of two; the 2% covers the 99-level discretization.
  CHECK(std::abs(2.0 * crps(samples, x) - pairwise) / pairwise < 0.02);
}

TEST_CASE("DTW hand cases and reference implementation") {
  CHECK(dtw(Vec{1, 2, 3}, Vec{1, 2, 2, 3}) == doctest::Approx(0.0));
  CHECK(dtw(Vec{3}, Vec{1, 2}) == doctest::Approx(3.0));
  CHECK(dtw(Vec{0, 0}, Vec{1}) == doctest::Approx(2.0));
  const Vec a{0.3, 0.9, 0.4, 0.4, 0.1, 0.7, 0.2};
  const Vec b{0.1, 0.5, 0.9, 0.8, 0.2, 0.0, 0.3, 0.6, 0.4};
  CHECK(dtw(a, b) == doctest::Approx(dtw_reference(a, b)).epsilon(1e-12));
  CHECK(dtw(a, b) == doctest::Approx(dtw(b, a)).epsilon(1e-12));
  CHECK(dtw(a, a) == doctest::Approx(0.0));
  CHECK_THROWS_AS(dtw({}, Vec{1.0}), std::invalid_argument);
}

TEST_CASE("point metrics") {
  const Vec f{1, 2, 3}, y{2, 2, 1};
  CHECK(mae(f, y) == doctest::Approx(1.0));
  CHECK(rmse(f, y) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  // Translation covariance.
  Vec f2 = f, y2 = y;
  for (double& v : f2) v += 10.0;
  for (double& v : y2) v += 10.0;
  CHECK(mae(f2, y2) == doctest::Approx(mae(f, y)));
  CHECK_THROWS_AS(mae(f, Vec{1.0}), std::invalid_argument);
}

TEST_CASE("peak and AUC errors honor the inverse transform") {
  const Vec f{0.1, 0.5, 0.2}, y{0.2, 0.3, 0.3};
  auto dbl = [](double v) { return 2.0 * v; };
  CHECK(peak_error(f, y, nullptr) == doctest::Approx(0.2));
  CHECK(peak_error(f, y, dbl) == doctest::Approx(0.4));
  CHECK(auc_error(f, y, nullptr) == doctest::Approx(0.0));
  CHECK(auc_error(f, y, dbl) == doctest::Approx(0.0));
  CHECK(auc_error(Vec{1, 1}, Vec{0, 1}, dbl) == doctest::Approx(2.0));
}

TEST_CASE("launch summaries") {
  // Three constant paths of two steps: AUCs {2, 4, 6}, peaks {1, 2, 3}.
  const std::vector<Vec> paths{{1, 1}, {2, 2}, {3, 3}};
  LaunchSummary s = launch_summaries(paths, nullptr);
  CHECK(s.p50_auc == doctest::Approx(4.0));
  CHECK(s.p90_peak == doctest::Approx(2.8));
  CHECK(s.auc_bandwidth == doctest::Approx(5.6 - 2.4));

  LaunchSummary one = launch_summaries({{1.0, 2.0}}, nullptr);
  CHECK(one.p50_auc == doctest::Approx(3.0));
  CHECK(one.auc_bandwidth == doctest::Approx(0.0));
  CHECK_THROWS_AS(launch_summaries({}, nullptr), std::invalid_argument);
}

TEST_CASE("median split segmentation sends ties to the low quadrants") {
  std::vector<LaunchSummary> s(4);
  s[0] = {10.0, 0.0, 1.0};  // low pot, low risk
  s[1] = {20.0, 0.0, 2.0};  // tie with median pot goes low
  s[2] = {30.0, 0.0, 5.0};  // high pot, high risk
  s[3] = {40.0, 0.0, 1.5};
  // medians: pot 25, risk 1.75
  std::vector<Quadrant> q = segment(s);
  CHECK(q[0] == Quadrant::LP_LR);
  CHECK(q[1] == Quadrant::LP_HR);
  CHECK(q[2] == Quadrant::HP_HR);
  CHECK(q[3] == Quadrant::HP_LR);
  CHECK(to_string(Quadrant::HP_LR) == "HP-LR");

  std::vector<LaunchSummary> same(3, LaunchSummary{5.0, 1.0, 0.5});
  for (Quadrant qq : segment(same)) CHECK(qq == Quadrant::LP_LR);
  CHECK(segment({}).empty());
}

TEST_CASE("window scoring on a deterministic ensemble") {
  // Every sample equals the truth: all scores vanish.
  const std::vector<Vec> exact{Vec(7, 0.4), Vec(7, 0.6), Vec(7, 0.1)};
  const Vec actual{0.4, 0.6, 0.1};
  WindowScore ws = score_window(exact, actual, nullptr, {});
  CHECK(ws.mae == doctest::Approx(0.0));
  CHECK(ws.mcrps == doctest::Approx(0.0));
  CHECK(ws.dtw == doctest::Approx(0.0));
  REQUIRE(ws.pinball_curve.size() == 99);
  for (double v : ws.pinball_curve) CHECK(v == doctest::Approx(0.0));

  // Bands: in-range bands are scored, bands past the window are skipped.
  std::vector<HorizonBand> bands{{0, 2, "1-2"}, {2, 3, "3-3"}, {0, 8, "1-8"}};
  WindowScore wb = score_window(exact, actual, nullptr, bands);
  REQUIRE(wb.bands.size() == 2);
  CHECK(wb.bands[0].label == "1-2");
  CHECK(wb.bands[1].label == "3-3");

  CHECK_THROWS_AS(score_window(exact, Vec{0.4}, nullptr, {}), std::invalid_argument);
}

TEST_CASE("quantile grid and median path") {
  const std::vector<Vec> step_samples{{3.0, 1.0, 2.0}, {5.0, 5.0, 5.0}};
  QuantileGrid g = quantile_grid(step_samples);
  REQUIRE(g.levels.size() == 99);
  REQUIRE(g.values.size() == 2);
  CHECK(g.levels[49] == doctest::Approx(0.5));
  CHECK(g.values[0][49] == doctest::Approx(2.0));
  for (std::size_t j = 1; j < 99; ++j) CHECK(g.values[0][j] >= g.values[0][j - 1]);
  Vec med = median_path(step_samples);
  CHECK(med[0] == doctest::Approx(2.0));
  CHECK(med[1] == doctest::Approx(5.0));
}
