// Command-line front end: synthetic data generation, training, forecasting,
// evaluation, the fusion ablation, stability checks, and the linear-Gaussian
// oracle experiments. Exit codes: 0 success, 1 validation error, 2 runtime
// divergence.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lifecast/config.hpp"
#include "lifecast/oracle.hpp"
#include "lifecast/panel.hpp"
#include "lifecast/protocol.hpp"

namespace {

using namespace lifecast;

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool serial = false;
};

Exec exec_policy(const GlobalArgs& g) { return g.serial ? Exec::Serial : Exec::Parallel; }

RunConfig effective_config(const GlobalArgs& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  if (g.seed_set) cfg.seed = g.seed;
  validate_config(cfg);
  return cfg;
}

// For commands operating on a trained artifact: the artifact's own config is
// the default, with --config / --seed as overrides.
RunConfig artifact_config(const GlobalArgs& g, const ModelArtifact& art) {
  RunConfig cfg = g.config_path.empty() ? art.config : load_config(g.config_path);
  if (g.seed_set) cfg.seed = g.seed;
  validate_config(cfg);
  return cfg;
}

std::filesystem::path out_path(const GlobalArgs& g, const std::string& name) {
  std::filesystem::create_directories(g.out_dir);
  return std::filesystem::path(g.out_dir) / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

PanelDataset load_transformed(const std::string& panel_path, TransformKind kind) {
  PanelDataset raw = load_panel(panel_path);
  std::vector<std::string> warnings;
  PanelDataset out;
  switch (kind) {
    case TransformKind::None: out = std::move(raw); break;
    case TransformKind::MaxNormalize: out = normalize_max_align(raw, &warnings); break;
    case TransformKind::LogIncrement: out = log_increment_transform(raw, &warnings); break;
  }
  for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
  return out;
}

void print_report(const std::string& name, const MetricReport& rep) {
  std::cout << name << ": windows=" << rep.windows << " MAE=" << fmt(rep.mae)
            << " RMSE=" << fmt(rep.rmse) << " MCRPS=" << fmt(rep.mcrps) << " DTW=" << fmt(rep.dtw)
            << " peak=" << fmt(rep.peak_err) << " auc=" << fmt(rep.auc_err) << '\n';
  for (const BandScore& b : rep.bands)
    std::cout << "  band " << b.label << ": MAE=" << fmt(b.mae) << " MCRPS=" << fmt(b.mcrps)
              << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Conditional diffusion life-cycle forecaster"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "Run configuration file (flat key = value)");
  app.add_option("--out", g.out_dir, "Output directory (created if missing)");
  auto* seed_opt = app.add_option("--seed", g.seed, "Override the config seed");
  app.add_flag("--serial", g.serial, "Disable parallel kernels");

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic", "Generate a synthetic life-cycle panel");
  std::size_t gen_n = 25, gen_t = 16;
  std::string gen_family = "bass";
  gen->add_option("--n", gen_n, "Number of series");
  gen->add_option("--length", gen_t, "Series length");
  gen->add_option("--family", gen_family, "Curve family");

  // train
  auto* tr = app.add_subcommand("train", "Train a model on the training split of a panel");
  std::string tr_panel, tr_transform = "max-normalize";
  tr->add_option("--panel", tr_panel, "Panel CSV")->required();
  tr->add_option("--transform", tr_transform, "none | max-normalize | log-increment");

  // forecast
  auto* fc = app.add_subcommand("forecast", "Forecast one series with a trained model");
  std::string fc_model, fc_panel, fc_series;
  std::size_t fc_horizon = 0, fc_samples = 0, fc_t0 = 0;
  fc->add_option("--model", fc_model, "Model artifact")->required();
  fc->add_option("--panel", fc_panel, "Panel CSV holding the focal series")->required();
  fc->add_option("--series", fc_series, "Focal series id")->required();
  fc->add_option("--horizon", fc_horizon, "Forecast steps (default: config horizon)");
  fc->add_option("--samples", fc_samples, "Rollouts (default: config samples)");
  fc->add_option("--t0", fc_t0, "Forecast origin (default: config t0)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Rolling cold-start evaluation");
  std::string ev_model, ev_panel, ev_split = "test";
  ev->add_option("--model", ev_model, "Model artifact")->required();
  ev->add_option("--panel", ev_panel, "Panel CSV")->required();
  ev->add_option("--split", ev_split, "test | all (test = series absent from the artifact library)");

  // ablate-fusion
  auto* ab = app.add_subcommand("ablate-fusion", "Train and evaluate both fusion variants");
  std::string ab_panel, ab_transform = "max-normalize";
  ab->add_option("--panel", ab_panel, "Panel CSV")->required();
  ab->add_option("--transform", ab_transform, "none | max-normalize | log-increment");

  // stability-check
  auto* st = app.add_subcommand("stability-check", "Stability analysis of a trained artifact");
  std::string st_model;
  st->add_option("--model", st_model, "Model artifact")->required();

  // oracle-sim
  auto* os = app.add_subcommand("oracle-sim", "Linear-Gaussian oracle simulation");
  OracleConfig ocfg;
  bool os_independent = false;
  os->add_option("--rho", ocfg.rho, "Transition contraction factor");
  os->add_option("--lx", ocfg.lx, "Input gain");
  os->add_option("--lp", ocfg.lp, "Emission gain");
  os->add_option("--eps-gen", ocfg.eps_gen, "One-step generator error");
  os->add_option("--eps-f", ocfg.eps_f, "Transition drift");
  os->add_option("--e0", ocfg.e0, "Initial latent error");
  os->add_option("--latent-dim", ocfg.latent_dim, "Latent dimension");
  os->add_option("--obs-dim", ocfg.obs_dim, "Observation dimension");
  os->add_option("--horizon", ocfg.horizon, "Steps per rollout");
  os->add_option("--rollouts", ocfg.rollouts, "Monte Carlo rollouts");
  os->add_option("--pulse-time", ocfg.pulse_time, "Pulse step (0 = off)");
  os->add_option("--pulse-mag", ocfg.pulse_mag, "Pulse magnitude");
  os->add_flag("--independent-noise", os_independent,
               "Draw the two systems' observation noise independently");

  // kappa-sweep
  auto* ks = app.add_subcommand("kappa-sweep", "Plateau vs bound across amplification factors");
  OracleConfig kcfg;
  std::string ks_grid = "0.1,0.3,0.5,0.7,0.9,0.99";
  ks->add_option("--kappas", ks_grid, "Comma-separated kappa grid");
  ks->add_option("--rho", kcfg.rho, "Transition contraction factor");
  ks->add_option("--lp", kcfg.lp, "Emission gain");
  ks->add_option("--eps-gen", kcfg.eps_gen, "One-step generator error");
  ks->add_option("--eps-f", kcfg.eps_f, "Transition drift");
  ks->add_option("--e0", kcfg.e0, "Initial latent error");
  ks->add_option("--latent-dim", kcfg.latent_dim, "Latent dimension");
  ks->add_option("--obs-dim", kcfg.obs_dim, "Observation dimension");
  ks->add_option("--horizon", kcfg.horizon, "Steps per rollout");
  ks->add_option("--rollouts", kcfg.rollouts, "Monte Carlo rollouts");

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;

  if (gen->parsed()) {
    RunConfig cfg = effective_config(g);
    PanelDataset ds = generate_synthetic(gen_n, gen_t, cfg.seed, gen_family);
    const auto path = out_path(g, "panel.csv");
    save_panel(path.string(), ds);
    std::cout << "wrote " << path.string() << " (" << ds.series.size() << " series)\n";
    return 0;
  }

  if (tr->parsed()) {
    RunConfig cfg = effective_config(g);
    PanelDataset data = load_transformed(tr_panel, transform_from_string(tr_transform));
    auto [train_idx, test_idx] = split_series(data.series.size(), cfg.train_frac, cfg.seed);
    FitResult fit = fit_model(data, train_idx, cfg);
    const auto model_path = out_path(g, "model.json");
    save_artifact(model_path.string(), fit.artifact);

    std::ostringstream log_csv;
    log_csv << "step,loss\n";
    for (std::size_t i = 0; i < fit.log.losses.size(); ++i)
      log_csv << (i + 1) << ',' << fmt(fit.log.losses[i]) << '\n';
    write_text(out_path(g, "train_log.csv"), log_csv.str());

    StabilityInfo stab = analyze_stability(fit.artifact, 8, exec_policy(g));
    write_text(out_path(g, "stability.json"), stability_to_json(stab));

    std::cout << "trained on " << train_idx.size() << " series (" << test_idx.size()
              << " held out), " << fit.log.steps_run << " steps, final loss "
              << fmt(fit.log.final_loss)
              << (fit.log.stopped_on_plateau ? " (plateau stop)" : "") << '\n'
              << "stability: rho_bar=" << fmt(stab.rho_bar) << " lx_bar=" << fmt(stab.lx_bar)
              << " kappa_bar=" << fmt(stab.kappa_bar)
              << (stab.sufficient ? " [sufficient]" : " [not sufficient]") << '\n'
              << "wrote " << model_path.string() << '\n';
    return 0;
  }

  if (fc->parsed()) {
    ModelArtifact art = load_artifact(fc_model);
    RunConfig base = artifact_config(g, art);
    PanelDataset data = load_transformed(fc_panel, art.transform);
    const SeriesRecord* rec = nullptr;
    for (const SeriesRecord& r : data.series)
      if (r.id == fc_series) rec = &r;
    if (rec == nullptr) throw std::invalid_argument("series not found in panel: " + fc_series);

    const std::size_t t0 = fc_t0 != 0 ? fc_t0 : (base.mode == "pre-launch" ? 1 : base.t0);
    const std::size_t horizon = fc_horizon != 0 ? fc_horizon : base.horizon - (t0 - 1);
    const std::size_t samples = fc_samples != 0 ? fc_samples : base.samples;
    if (t0 - 1 > rec->values.size())
      throw std::invalid_argument("t0 exceeds observed length of series " + fc_series);
    Vec prefix(rec->values.begin(), rec->values.begin() + static_cast<std::ptrdiff_t>(t0 - 1));

    ForecastOutput out =
        forecast(art, rec->descriptors, prefix, horizon, samples, base.seed, exec_policy(g), rec->id);

    std::ostringstream csv;
    csv << "series_id,t,u,value\n";
    for (std::size_t t = 0; t < out.grid.values.size(); ++t)
      for (std::size_t j = 0; j < out.grid.levels.size(); ++j)
        csv << rec->id << ',' << (t + 1) << ',' << fmt(out.grid.levels[j]) << ','
            << fmt(out.grid.values[t][j]) << '\n';
    const auto path = out_path(g, "forecast.csv");
    write_text(path, csv.str());
    std::cout << "wrote " << path.string() << " (" << horizon << " steps x " << samples
              << " samples, prefix " << prefix.size() << ")\n";
    return 0;
  }

  if (ev->parsed()) {
    ModelArtifact art = load_artifact(ev_model);
    RunConfig cfg = artifact_config(g, art);
    PanelDataset data = load_transformed(ev_panel, art.transform);
    if (ev_split != "test" && ev_split != "all")
      throw std::invalid_argument("--split must be 'test' or 'all'");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.series.size(); ++i) {
      bool in_library = false;
      for (const LibraryEntry& e : art.library) in_library = in_library || e.id == data.series[i].id;
      if (ev_split == "all" || !in_library) idx.push_back(i);
    }
    if (idx.empty()) throw std::invalid_argument("no series to evaluate under --split " + ev_split);

    EvalResult result = evaluate_protocol(data, idx, art, cfg, exec_policy(g));
    write_text(out_path(g, "report.json"), report_to_json(result, cfg));
    write_report_csv(out_path(g, "report.csv").string(), result);
    write_quantile_csv(out_path(g, "quantile_bands.csv").string(), result);
    print_report("model", result.model);
    print_report("climatology", result.climatology);
    return 0;
  }

  if (ab->parsed()) {
    RunConfig cfg = effective_config(g);
    PanelDataset data = load_transformed(ab_panel, transform_from_string(ab_transform));
    AblationResult r = ablate_fusion(data, cfg, exec_policy(g));
    nlohmann::json j{{"shared_hash_scaled", r.shared_hash_scaled},
                     {"shared_hash_learned", r.shared_hash_learned}};
    auto table = [](const MetricReport& rep) {
      nlohmann::json bands = nlohmann::json::array();
      for (const BandScore& b : rep.bands)
        bands.push_back({{"label", b.label}, {"mae", b.mae}, {"mcrps", b.mcrps}});
      return nlohmann::json{{"mae", rep.mae}, {"mcrps", rep.mcrps}, {"bands", bands}};
    };
    j["scaled"] = table(r.scaled);
    j["learned"] = table(r.learned);
    write_text(out_path(g, "ablation.json"), j.dump(1));
    std::cout << "fusion variant   MAE        MCRPS\n";
    std::cout << "scaled           " << fmt(r.scaled.mae) << "  " << fmt(r.scaled.mcrps) << '\n';
    std::cout << "learned          " << fmt(r.learned.mae) << "  " << fmt(r.learned.mcrps) << '\n';
    for (const BandScore& b : r.scaled.bands)
      std::cout << "scaled  band " << b.label << ": MAE=" << fmt(b.mae)
                << " MCRPS=" << fmt(b.mcrps) << '\n';
    for (const BandScore& b : r.learned.bands)
      std::cout << "learned band " << b.label << ": MAE=" << fmt(b.mae)
                << " MCRPS=" << fmt(b.mcrps) << '\n';
    std::cout << "non-fusion init hashes "
              << (r.shared_hash_scaled == r.shared_hash_learned ? "match" : "DIFFER") << '\n';
    return 0;
  }

  if (st->parsed()) {
    ModelArtifact art = load_artifact(st_model);
    StabilityInfo info = analyze_stability(art, 8, exec_policy(g));
    write_text(out_path(g, "stability.json"), stability_to_json(info));
    std::cout << "gates: z in [" << fmt(info.measured.z_min) << ", " << fmt(info.measured.z_max)
              << "], r <= " << fmt(info.measured.r_max) << ", |h|_inf=" << fmt(info.h_inf) << '\n'
              << "bounds: rho_bar=" << fmt(info.rho_bar) << " lx_bar=" << fmt(info.lx_bar)
              << " kappa_bar=" << fmt(info.kappa_bar) << '\n'
              << "empirical: rho_hat=" << fmt(info.rho_hat) << " lx_hat=" << fmt(info.lx_hat)
              << " kappa_hat=" << fmt(info.kappa_hat) << '\n'
              << "sufficient condition: " << (info.sufficient ? "PASS" : "FAIL")
              << " (margin " << fmt(info.margin) << ")\n";
    return 0;
  }

  if (os->parsed()) {
    if (g.seed_set) ocfg.seed = g.seed;
    ocfg.common_noise = !os_independent;
    OracleSeries series = simulate(build_oracle(ocfg), exec_policy(g));
    std::ostringstream csv;
    csv << "t,e_hat,delta_hat,bound\n";
    for (std::size_t t = 0; t < series.delta_hat.size(); ++t)
      csv << (t + 1) << ',' << fmt(series.e_hat[t]) << ',' << fmt(series.delta_hat[t]) << ','
          << fmt(series.bound) << '\n';
    const auto path = out_path(g, "oracle_sim.csv");
    write_text(path, csv.str());
    std::cout << "kappa=" << fmt(series.kappa) << " bound=" << fmt(series.bound) << " final delta="
              << fmt(series.delta_hat.back()) << "; wrote " << path.string() << '\n';
    return 0;
  }

  if (ks->parsed()) {
    if (g.seed_set) kcfg.seed = g.seed;
    std::vector<double> grid;
    std::stringstream ss(ks_grid);
    std::string part;
    while (std::getline(ss, part, ','))
      if (!part.empty()) grid.push_back(std::stod(part));
    if (grid.empty()) throw std::invalid_argument("empty kappa grid");
    std::vector<KappaSweepRow> rows = sweep_kappa(kcfg, grid, exec_policy(g));
    std::ostringstream csv;
    csv << "kappa,lx,plateau,bound\n";
    for (const KappaSweepRow& r : rows)
      csv << fmt(r.kappa) << ',' << fmt(r.lx) << ',' << fmt(r.plateau) << ',' << fmt(r.bound)
          << '\n';
    const auto path = out_path(g, "kappa_sweep.csv");
    write_text(path, csv.str());
    for (const KappaSweepRow& r : rows)
      std::cout << "kappa=" << fmt(r.kappa) << " plateau=" << fmt(r.plateau)
                << " bound=" << fmt(r.bound) << '\n';
    std::cout << "wrote " << path.string() << '\n';
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
}
