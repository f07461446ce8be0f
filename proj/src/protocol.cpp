#include "lifecast/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lifecast/rng.hpp"

namespace lifecast {

void save_artifact(const std::string& path, const ModelArtifact& art) {
  nlohmann::json lib = nlohmann::json::array();
  for (const LibraryEntry& e : art.library)
    lib.push_back({{"id", e.id}, {"values", e.values}, {"desc", e.desc}});
  nlohmann::json j{{"version", art.version},
                   {"config", config_to_text(art.config)},
                   {"schedule_beta", art.sched.beta},
                   {"params", nlohmann::json::parse(params_to_json(art.params))},
                   {"encoder", encoder_to_json(art.encoder)},
                   {"transform", to_string(art.transform)},
                   {"value_scale", art.value_scale},
                   {"seed", art.seed},
                   {"library", lib}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write artifact: " + path);
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

ModelArtifact load_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open artifact: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("artifact is not valid JSON: " + std::string(e.what()));
  }
  ModelArtifact art;
  const std::string version = j.at("version").get<std::string>();
  if (version != art.version)
    throw std::runtime_error("unsupported artifact version '" + version + "'");
  art.config = parse_config_text(j.at("config").get<std::string>());
  art.sched.beta = j.at("schedule_beta").get<Vec>();
  if (art.sched.beta.empty()) throw std::runtime_error("artifact schedule is empty");
  art.sched.alpha.resize(art.sched.beta.size());
  art.sched.alpha_bar.resize(art.sched.beta.size());
  double prod = 1.0;
  for (std::size_t i = 0; i < art.sched.beta.size(); ++i) {
    art.sched.alpha[i] = 1.0 - art.sched.beta[i];
    prod *= art.sched.alpha[i];
    art.sched.alpha_bar[i] = prod;
  }
  art.params = params_from_json(j.at("params").dump());
  art.encoder = encoder_from_json(j.at("encoder"));
  art.transform = transform_from_string(j.at("transform").get<std::string>());
  art.value_scale = j.at("value_scale").get<double>();
  art.seed = j.at("seed").get<std::uint64_t>();
  for (const nlohmann::json& je : j.at("library")) {
    LibraryEntry e;
    e.id = je.at("id").get<std::string>();
    e.values = je.at("values").get<Vec>();
    e.desc = je.at("desc").get<Vec>();
    art.library.push_back(std::move(e));
  }
  return art;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_series(std::size_t n,
                                                                           double train_frac,
                                                                           std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("split_series: empty panel");
  if (!(train_frac > 0.0 && train_frac < 1.0))
    throw std::invalid_argument("split_series: train_frac must be in (0,1)");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  RngStream rng = RngStream(seed).substream("split");
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t k = rng.uniform_index(i + 1);
    std::swap(perm[i], perm[k]);
  }
  std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_frac * static_cast<double>(n)));
  if (n > 1) n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

ContextInput build_reference_context(const std::vector<LibraryEntry>& library, const Vec& desc,
                                     std::size_t k, double gamma, const std::string& exclude_id) {
  std::vector<std::size_t> cand;
  std::vector<Vec> descs;
  for (std::size_t i = 0; i < library.size(); ++i) {
    if (library[i].id == exclude_id) continue;
    cand.push_back(i);
    descs.push_back(library[i].desc);
  }
  if (cand.empty())
    throw std::invalid_argument("reference library is empty after excluding '" + exclude_id + "'");
  ReferenceSelection sel = select_references(descs, desc, k);
  ContextInput in;
  for (std::size_t idx : sel.indices) {
    const LibraryEntry& e = library[cand[idx]];
    Matrix m(e.values.size(), 1);
    for (std::size_t t = 0; t < e.values.size(); ++t) m(t, 0) = e.values[t];
    in.refs.push_back(std::move(m));
  }
  in.weights = similarity_weights(sel.distances2, gamma);
  in.descriptor = desc;
  return in;
}

namespace {

PanelDataset subset_panel(const PanelDataset& data, const std::vector<std::size_t>& idx) {
  PanelDataset sub;
  sub.desc_columns = data.desc_columns;
  sub.transform = data.transform;
  for (std::size_t i : idx) sub.series.push_back(data.series.at(i));
  return sub;
}

ModelShape shape_from_config(const RunConfig& cfg, std::size_t desc_dim) {
  ModelShape shape;
  shape.value_dim = 1;
  shape.desc_dim = desc_dim;
  shape.ref_dim = cfg.ref_dim;
  shape.static_dim = cfg.static_dim;
  shape.hidden_dim = cfg.hidden_dim;
  shape.channels = cfg.channels;
  shape.blocks = cfg.blocks;
  shape.window = cfg.window;
  shape.embed_width = cfg.embed_width;
  shape.static_depth = cfg.static_depth;
  shape.fusion = fusion_from_string(cfg.fusion);
  return shape;
}

}  // namespace

FitResult fit_model(const PanelDataset& data, const std::vector<std::size_t>& train_idx,
                    const RunConfig& cfg) {
  validate_config(cfg);
  if (train_idx.size() < 2)
    throw std::invalid_argument("fit_model: need at least 2 training series for leave-focal-out");

  const PanelDataset train_panel = subset_panel(data, train_idx);
  DescriptorEncoder encoder = fit_descriptor_encoder(train_panel);

  double mean = 0.0, count = 0.0;
  for (const SeriesRecord& rec : train_panel.series)
    for (double v : rec.values) {
      mean += v;
      count += 1.0;
    }
  if (count == 0.0) throw std::invalid_argument("fit_model: training split has no values");
  mean /= count;
  double var = 0.0;
  for (const SeriesRecord& rec : train_panel.series)
    for (double v : rec.values) var += (v - mean) * (v - mean);
  const double value_scale = std::max(std::sqrt(var / count), 1e-9);

  std::vector<LibraryEntry> library;
  library.reserve(train_panel.series.size());
  for (const SeriesRecord& rec : train_panel.series) {
    LibraryEntry e;
    e.id = rec.id;
    e.values = rec.values;
    for (double& v : e.values) v /= value_scale;
    e.desc = encoder.encode(rec.descriptors);
    library.push_back(std::move(e));
  }

  std::vector<TrainSeries> series;
  series.reserve(library.size());
  for (const LibraryEntry& e : library) {
    TrainSeries ts;
    ts.values = e.values;
    ts.context = build_reference_context(library, e.desc, cfg.refs_k, cfg.gamma, e.id);
    series.push_back(std::move(ts));
  }

  FitResult fit;
  fit.artifact.config = cfg;
  fit.artifact.sched = NoiseSchedule::linear(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end);
  fit.artifact.params = model_init(shape_from_config(cfg, encoder.dim()), cfg.init_scale, cfg.seed);
  fit.init_shared_hash = param_hash(fit.artifact.params, /*skip_fusion=*/true);
  fit.artifact.encoder = std::move(encoder);
  fit.artifact.transform = data.transform;
  fit.artifact.value_scale = value_scale;
  fit.artifact.seed = cfg.seed;
  fit.artifact.library = std::move(library);

  TrainOptions opt;
  opt.steps = cfg.train_steps;
  opt.batch = cfg.batch;
  opt.lr = cfg.lr;
  opt.enforce_interval = cfg.enforce_interval;
  opt.target_kappa = cfg.target_kappa;
  opt.lp = cfg.lp;
  opt.plateau_window = cfg.plateau_window;
  opt.nonfinite_limit = cfg.nonfinite_limit;
  opt.seed = cfg.seed;
  fit.log = train(fit.artifact.params, fit.artifact.sched, series, opt);
  return fit;
}

StabilityInfo analyze_stability(const ModelArtifact& art, std::size_t max_series, Exec exec) {
  if (art.library.size() < 2)
    throw std::invalid_argument("analyze_stability: artifact library too small");
  std::vector<StateSample> states;
  const std::size_t n = std::min(max_series, art.library.size());
  for (std::size_t i = 0; i < n; ++i) {
    const LibraryEntry& e = art.library[i];
    ContextInput in =
        build_reference_context(art.library, e.desc, art.config.refs_k, art.config.gamma, e.id);
    ContextState cs = build_context(art.params, in);
    Vec h = cs.h0;
    for (double v : e.values) {
      const Vec x{v};
      states.push_back(StateSample{h, concat(x, cs.c)});
      h = advance_state(art.params, h, cs.c, x);
    }
  }

  EmpiricalMeasure meas = measure_empirical(art.params.trans, states, 1e-5, exec);
  StabilityInfo info;
  info.measured = meas.gates;
  info.h_inf = meas.h_inf;
  info.rho_hat = meas.rho_hat;
  info.lx_hat = meas.lx_hat;
  const double lp = art.config.lp;
  info.kappa_hat = info.rho_hat < 1.0 ? lp * info.lx_hat / (1.0 - info.rho_hat)
                                      : std::numeric_limits<double>::infinity();
  info.rho_bar = gru_rho_bound(art.params.trans, meas.gates);
  info.lx_bar = gru_lx_bound(art.params.trans, meas.gates);
  info.kappa_bar = info.rho_bar < 1.0 ? amplification(info.rho_bar, info.lx_bar, lp)
                                      : std::numeric_limits<double>::infinity();
  SufficiencyCheck check = check_sufficient(info.rho_bar, info.lx_bar, lp);
  info.sufficient = check.pass;
  info.margin = check.margin;
  return info;
}

namespace {

nlohmann::json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string stability_to_json(const StabilityInfo& info) {
  nlohmann::json j{{"gates",
                    {{"z_min", info.measured.z_min},
                     {"z_max", info.measured.z_max},
                     {"r_max", info.measured.r_max}}},
                   {"h_inf", info.h_inf},
                   {"rho_bar", info.rho_bar},
                   {"lx_bar", info.lx_bar},
                   {"kappa_bar", finite_or_string(info.kappa_bar)},
                   {"rho_hat", info.rho_hat},
                   {"lx_hat", info.lx_hat},
                   {"kappa_hat", finite_or_string(info.kappa_hat)},
                   {"sufficient", info.sufficient},
                   {"margin", info.margin}};
  return j.dump(1);
}

MetricReport aggregate_scores(const std::vector<WindowScore>& scores) {
  MetricReport rep;
  rep.pinball_curve.assign(99, 0.0);
  if (scores.empty()) return rep;
  std::vector<std::string> band_order;
  std::map<std::string, std::pair<BandScore, std::size_t>> band_acc;
  for (const WindowScore& s : scores) {
    rep.mae += s.mae;
    rep.rmse += s.rmse;
    rep.mcrps += s.mcrps;
    rep.dtw += s.dtw;
    rep.peak_err += s.peak_err;
    rep.auc_err += s.auc_err;
    for (std::size_t j = 0; j < 99 && j < s.pinball_curve.size(); ++j)
      rep.pinball_curve[j] += s.pinball_curve[j];
    for (const BandScore& b : s.bands) {
      auto it = band_acc.find(b.label);
      if (it == band_acc.end()) {
        band_order.push_back(b.label);
        it = band_acc.emplace(b.label, std::make_pair(BandScore{b.label, 0.0, 0.0}, 0u)).first;
      }
      it->second.first.mae += b.mae;
      it->second.first.mcrps += b.mcrps;
      it->second.second += 1;
    }
  }
  const double inv = 1.0 / static_cast<double>(scores.size());
  rep.mae *= inv;
  rep.rmse *= inv;
  rep.mcrps *= inv;
  rep.dtw *= inv;
  rep.peak_err *= inv;
  rep.auc_err *= inv;
  for (double& v : rep.pinball_curve) v *= inv;
  for (const std::string& label : band_order) {
    auto& [sum, cnt] = band_acc.at(label);
    rep.bands.push_back(BandScore{label, sum.mae / static_cast<double>(cnt),
                                  sum.mcrps / static_cast<double>(cnt)});
  }
  rep.windows = scores.size();
  return rep;
}

EvalResult evaluate_protocol(const PanelDataset& data, const std::vector<std::size_t>& eval_idx,
                             const ModelArtifact& art, const RunConfig& cfg, Exec exec) {
  validate_config(cfg);
  if (data.transform != art.transform)
    throw std::invalid_argument("evaluate: panel transform '" + to_string(data.transform) +
                                "' does not match artifact transform '" +
                                to_string(art.transform) + "'");
  const std::size_t t0 = cfg.mode == "pre-launch" ? 1 : cfg.t0;
  const std::size_t span = cfg.horizon;      // steps covered by one window
  const std::size_t flen = span - (t0 - 1);  // forecast steps per window
  const std::vector<HorizonBand> bands = parse_bands(cfg.bands);

  for (std::size_t i : eval_idx)
    if (data.series.at(i).descriptors.size() != data.desc_columns.size())
      throw std::invalid_argument("evaluate: series '" + data.series[i].id +
                                  "' is missing descriptor fields");

  struct Task {
    std::size_t series = 0;
    std::size_t offset = 0;
  };
  std::vector<Task> tasks;
  for (std::size_t i : eval_idx) {
    const std::size_t len = data.series[i].values.size();
    for (std::size_t b = 0; b + span <= len; b += cfg.stride) tasks.push_back(Task{i, b});
  }

  std::vector<WindowRow> rows(tasks.size());
  std::vector<WindowScore> clim_scores(tasks.size());
  std::vector<char> clim_ok(tasks.size(), 0);
  std::vector<LaunchSummary> launch_slots(tasks.size());
  std::vector<char> launch_ok(tasks.size(), 0);
  const RngStream eval_root = RngStream(cfg.seed).substream("eval");

  parallel_for(exec, tasks.size(), [&](std::size_t w) {
    const Task task = tasks[w];
    const SeriesRecord& rec = data.series[task.series];
    const auto inverse = [&](double v) { return inverse_transform_value(data, rec, v); };

    const Vec desc = art.encoder.encode(rec.descriptors);
    ContextInput in =
        build_reference_context(art.library, desc, cfg.refs_k, cfg.gamma, rec.id);
    ContextState ctx = build_context(art.params, in);

    std::vector<Vec> prefix;
    for (std::size_t t = task.offset; t + 1 < task.offset + t0; ++t)
      prefix.push_back(Vec{rec.values[t] / art.value_scale});

    RngStream rng = eval_root.substream(task.series).substream(task.offset);
    RolloutResult roll = rollout(art.params, art.sched, ctx, prefix, flen, cfg.samples, rng,
                                 cfg.value_clip, Exec::Serial);

    std::vector<Vec> step_samples(flen, Vec(cfg.samples));
    for (std::size_t r = 0; r < cfg.samples; ++r)
      for (std::size_t t = 0; t < flen; ++t)
        step_samples[t][r] = roll.paths[r](t, 0) * art.value_scale;

    Vec actual(flen);
    for (std::size_t t = 0; t < flen; ++t) actual[t] = rec.values[task.offset + t0 - 1 + t];

    WindowRow& row = rows[w];
    row.series_id = rec.id;
    row.window = task.offset;
    row.score = score_window(step_samples, actual, inverse, bands);
    row.grid = quantile_grid(step_samples);

    if (task.offset == 0) {
      std::vector<Vec> paths(cfg.samples, Vec(flen));
      for (std::size_t r = 0; r < cfg.samples; ++r)
        for (std::size_t t = 0; t < flen; ++t) paths[r][t] = step_samples[t][r];
      launch_slots[w] = launch_summaries(paths, inverse);
      launch_ok[w] = 1;
    }

    // Climatology: at each forecast step, the ensemble of training-library
    // values at the same launch-aligned position (transform space).
    std::vector<Vec> clim(flen);
    bool ok = true;
    for (std::size_t t = 0; t < flen && ok; ++t) {
      const std::size_t pos = task.offset + t0 - 1 + t;
      for (const LibraryEntry& e : art.library)
        if (pos < e.values.size()) clim[t].push_back(e.values[pos] * art.value_scale);
      if (clim[t].empty()) ok = false;
    }
    if (ok) {
      clim_scores[w] = score_window(clim, actual, inverse, bands);
      clim_ok[w] = 1;
    }
  });

  EvalResult result;
  result.rows = std::move(rows);
  std::vector<WindowScore> model_scores;
  model_scores.reserve(result.rows.size());
  for (const WindowRow& r : result.rows) model_scores.push_back(r.score);
  result.model = aggregate_scores(model_scores);
  std::vector<WindowScore> clim_kept;
  for (std::size_t w = 0; w < tasks.size(); ++w)
    if (clim_ok[w]) clim_kept.push_back(clim_scores[w]);
  result.climatology = aggregate_scores(clim_kept);
  for (std::size_t w = 0; w < tasks.size(); ++w)
    if (launch_ok[w]) {
      result.launch_ids.push_back(data.series[tasks[w].series].id);
      result.launches.push_back(launch_slots[w]);
    }
  result.quadrants = segment(result.launches);
  return result;
}

ForecastOutput forecast(const ModelArtifact& art, const std::vector<std::string>& raw_descriptor,
                        const Vec& prefix, std::size_t horizon, std::size_t samples,
                        std::uint64_t seed, Exec exec, const std::string& exclude_id) {
  if (horizon == 0) throw std::invalid_argument("forecast: horizon must be >= 1");
  if (samples == 0) throw std::invalid_argument("forecast: need at least one sample");
  const Vec desc = art.encoder.encode(raw_descriptor);
  ContextInput in =
      build_reference_context(art.library, desc, art.config.refs_k, art.config.gamma, exclude_id);
  ContextState ctx = build_context(art.params, in);
  std::vector<Vec> pref;
  for (double v : prefix) pref.push_back(Vec{v / art.value_scale});
  RngStream rng = RngStream(seed).substream("forecast");
  RolloutResult roll =
      rollout(art.params, art.sched, ctx, pref, horizon, samples, rng, art.config.value_clip, exec);
  ForecastOutput out;
  out.step_samples.assign(horizon, Vec(samples));
  for (std::size_t r = 0; r < samples; ++r)
    for (std::size_t t = 0; t < horizon; ++t)
      out.step_samples[t][r] = roll.paths[r](t, 0) * art.value_scale;
  out.grid = quantile_grid(out.step_samples);
  out.median = median_path(out.step_samples);
  return out;
}

AblationResult ablate_fusion(const PanelDataset& data, const RunConfig& cfg, Exec exec) {
  auto [train_idx, test_idx] = split_series(data.series.size(), cfg.train_frac, cfg.seed);
  if (test_idx.empty()) throw std::invalid_argument("ablate_fusion: empty test split");

  AblationResult out;
  for (const std::string& fusion : {std::string("scaled"), std::string("learned")}) {
    RunConfig variant = cfg;
    variant.fusion = fusion;
    FitResult fit = fit_model(data, train_idx, variant);
    EvalResult eval = evaluate_protocol(data, test_idx, fit.artifact, variant, exec);
    if (fusion == "scaled") {
      out.scaled = eval.model;
      out.shared_hash_scaled = fit.init_shared_hash;
    } else {
      out.learned = eval.model;
      out.shared_hash_learned = fit.init_shared_hash;
    }
  }
  return out;
}

namespace {

nlohmann::json report_json(const MetricReport& rep) {
  nlohmann::json bands = nlohmann::json::array();
  for (const BandScore& b : rep.bands)
    bands.push_back({{"label", b.label}, {"mae", b.mae}, {"mcrps", b.mcrps}});
  return nlohmann::json{{"mae", rep.mae},           {"rmse", rep.rmse},
                        {"mcrps", rep.mcrps},       {"dtw", rep.dtw},
                        {"peak_err", rep.peak_err}, {"auc_err", rep.auc_err},
                        {"windows", rep.windows},   {"bands", bands},
                        {"pinball_curve", rep.pinball_curve}};
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string report_to_json(const EvalResult& result, const RunConfig& cfg) {
  nlohmann::json rows = nlohmann::json::array();
  for (const WindowRow& r : result.rows) {
    nlohmann::json bands = nlohmann::json::array();
    for (const BandScore& b : r.score.bands)
      bands.push_back({{"label", b.label}, {"mae", b.mae}, {"mcrps", b.mcrps}});
    rows.push_back({{"series_id", r.series_id},
                    {"window", r.window},
                    {"mae", r.score.mae},
                    {"rmse", r.score.rmse},
                    {"mcrps", r.score.mcrps},
                    {"dtw", r.score.dtw},
                    {"peak_err", r.score.peak_err},
                    {"auc_err", r.score.auc_err},
                    {"bands", bands}});
  }
  nlohmann::json launches = nlohmann::json::array();
  for (std::size_t i = 0; i < result.launches.size(); ++i)
    launches.push_back({{"series_id", result.launch_ids[i]},
                        {"p50_auc", result.launches[i].p50_auc},
                        {"p90_peak", result.launches[i].p90_peak},
                        {"auc_bandwidth", result.launches[i].auc_bandwidth},
                        {"quadrant", to_string(result.quadrants[i])}});
  nlohmann::json j{{"config", config_to_text(cfg)},
                   {"model", report_json(result.model)},
                   {"climatology", report_json(result.climatology)},
                   {"windows", rows},
                   {"launches", launches}};
  return j.dump(1);
}

void write_report_csv(const std::string& path, const EvalResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report csv: " + path);
  out << "series_id,window,mae,rmse,mcrps,dtw,peak_err,auc_err\n";
  for (const WindowRow& r : result.rows)
    out << r.series_id << ',' << r.window << ',' << fmt17(r.score.mae) << ','
        << fmt17(r.score.rmse) << ',' << fmt17(r.score.mcrps) << ',' << fmt17(r.score.dtw) << ','
        << fmt17(r.score.peak_err) << ',' << fmt17(r.score.auc_err) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_quantile_csv(const std::string& path, const EvalResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write quantile csv: " + path);
  out << "series_id,t,u,value\n";
  for (const WindowRow& r : result.rows) {
    if (r.window != 0) continue;  // the launch forecast of each series
    for (std::size_t t = 0; t < r.grid.values.size(); ++t)
      for (std::size_t j = 0; j < r.grid.levels.size(); ++j)
        out << r.series_id << ',' << (t + 1) << ',' << fmt17(r.grid.levels[j]) << ','
            << fmt17(r.grid.values[t][j]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace lifecast
