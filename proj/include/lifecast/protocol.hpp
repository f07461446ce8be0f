#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lifecast/config.hpp"
#include "lifecast/diffusion.hpp"
#include "lifecast/metrics.hpp"
#include "lifecast/panel.hpp"
#include "lifecast/stability.hpp"
#include "lifecast/train.hpp"

namespace lifecast {

// One training-library record carried inside the artifact: model-space values
// plus the encoded descriptor, enough to rebuild reference contexts for new
// products at inference time.
struct LibraryEntry {
  std::string id;
  Vec values;  // transformed and standardized (model space)
  Vec desc;    // encoded descriptor
};

// Self-describing model artifact: config echo, schedule, all parameters, the
// descriptor encoding map, the value standardization, the reference library,
// and the seed it was trained from. JSON on disk, version-tagged.
struct ModelArtifact {
  std::string version = "lifecast-artifact-v1";
  RunConfig config;
  NoiseSchedule sched;
  ModelParameters params;
  DescriptorEncoder encoder;
  TransformKind transform = TransformKind::None;
  double value_scale = 1.0;  // train-split standard deviation of values
  std::uint64_t seed = 1;
  std::vector<LibraryEntry> library;
};

void save_artifact(const std::string& path, const ModelArtifact& art);
ModelArtifact load_artifact(const std::string& path);

// Deterministic 80/20-style split by series (cold start = unseen series).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_series(std::size_t n,
                                                                           double train_frac,
                                                                           std::uint64_t seed);

// K nearest library entries by encoded-descriptor distance, never including
// `exclude_id` (leave-focal-out).
ContextInput build_reference_context(const std::vector<LibraryEntry>& library, const Vec& desc,
                                     std::size_t k, double gamma, const std::string& exclude_id);

// Fits the descriptor encoder and value scale on the training split, builds
// leave-focal-out training contexts, trains, and packages the artifact.
struct FitResult {
  ModelArtifact artifact;
  TrainLog log;
  std::uint64_t init_shared_hash = 0;  // param_hash of the initial parameters, fusion skipped
};
FitResult fit_model(const PanelDataset& data, const std::vector<std::size_t>& train_idx,
                    const RunConfig& cfg);

// Post-hoc stability analysis of an artifact's transition map on teacher-
// forced library states: closed-form bounds at measured gate ranges plus
// finite-difference empirical factors.
struct StabilityInfo {
  GateRanges measured;
  double h_inf = 0.0;
  double rho_bar = 0.0;
  double lx_bar = 0.0;
  double kappa_bar = 0.0;  // +inf if rho_bar >= 1
  double rho_hat = 0.0;
  double lx_hat = 0.0;
  double kappa_hat = 0.0;
  bool sufficient = false;
  double margin = 0.0;
};
StabilityInfo analyze_stability(const ModelArtifact& art, std::size_t max_series = 8,
                                Exec exec = Exec::Serial);
std::string stability_to_json(const StabilityInfo& info);

// Aggregate of per-window scores.
struct MetricReport {
  double mae = 0.0;
  double rmse = 0.0;
  double mcrps = 0.0;
  double dtw = 0.0;
  double peak_err = 0.0;
  double auc_err = 0.0;
  Vec pinball_curve;             // 99 mean pinball values
  std::vector<BandScore> bands;  // horizon breakdown
  std::size_t windows = 0;
};
MetricReport aggregate_scores(const std::vector<WindowScore>& scores);

struct WindowRow {
  std::string series_id;
  std::size_t window = 0;  // window start offset within the series
  WindowScore score;
  QuantileGrid grid;  // forecast quantiles, transform space
};

struct EvalResult {
  MetricReport model;
  MetricReport climatology;  // per-step train-split ensemble baseline
  std::vector<WindowRow> rows;
  std::vector<std::string> launch_ids;  // series with a window at offset 0
  std::vector<LaunchSummary> launches;
  std::vector<Quadrant> quadrants;
};

// Rolling cold-start evaluation on the given series: per window, build the
// leave-focal-out context, roll the revealed prefix (t0 - 1 in-window steps;
// pre-launch mode means t0 = 1), draw `samples` rollouts, and score them.
// Windows run concurrently under the parallel policy; results are identical
// either way.
EvalResult evaluate_protocol(const PanelDataset& data, const std::vector<std::size_t>& eval_idx,
                             const ModelArtifact& art, const RunConfig& cfg,
                             Exec exec = Exec::Serial);

// Forecast for one (possibly unseen) product: encode its raw descriptor
// fields, build references from the artifact library, roll the prefix
// (transform-space values), and return transform-space samples.
struct ForecastOutput {
  std::vector<Vec> step_samples;  // [t][m]
  QuantileGrid grid;
  Vec median;
};
ForecastOutput forecast(const ModelArtifact& art, const std::vector<std::string>& raw_descriptor,
                        const Vec& prefix, std::size_t horizon, std::size_t samples,
                        std::uint64_t seed, Exec exec = Exec::Serial,
                        const std::string& exclude_id = "");

// Trains and evaluates both fusion variants under identical seeds and splits;
// everything except the fusion operation is shared.
struct AblationResult {
  MetricReport scaled;
  MetricReport learned;
  std::uint64_t shared_hash_scaled = 0;   // param_hash of the scaled init, fusion groups skipped
  std::uint64_t shared_hash_learned = 0;  // same for the learned init
};
AblationResult ablate_fusion(const PanelDataset& data, const RunConfig& cfg,
                             Exec exec = Exec::Serial);

// Report writers (LF line endings, '.' decimal).
std::string report_to_json(const EvalResult& result, const RunConfig& cfg);
void write_report_csv(const std::string& path, const EvalResult& result);
void write_quantile_csv(const std::string& path, const EvalResult& result);

}  // namespace lifecast
