#include "lifecast/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lifecast/optimizer.hpp"

namespace lifecast {

namespace {

void zero_params(ModelParameters& p) {
  for_each_param(p, [](const std::string&, Vec& v) { std::fill(v.begin(), v.end(), 0.0); });
}

// Teacher-forced transition states over a few sampled series, for gate
// measurement during training.
std::vector<StateSample> probe_states(const ModelParameters& p, const std::vector<TrainSeries>& data,
                                      RngStream rng, std::size_t max_series) {
  std::vector<StateSample> states;
  const std::size_t n = std::min(max_series, data.size());
  for (std::size_t k = 0; k < n; ++k) {
    const TrainSeries& ts = data[rng.uniform_index(data.size())];
    ContextState cs = build_context(p, ts.context);
    Vec h = cs.h0;
    for (double v : ts.values) {
      const Vec x{v};
      states.push_back(StateSample{h, concat(x, cs.c)});
      h = advance_state(p, h, cs.c, x);
    }
  }
  return states;
}

double window_mean(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = begin; i < end; ++i) {
    if (std::isfinite(v[i])) {
      acc += v[i];
      ++count;
    }
  }
  return count == 0 ? std::numeric_limits<double>::infinity() : acc / static_cast<double>(count);
}

}  // namespace

TrainLog train(ModelParameters& p, const NoiseSchedule& sched,
               const std::vector<TrainSeries>& data, const TrainOptions& opt) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  for (const TrainSeries& ts : data)
    if (ts.values.empty()) throw std::invalid_argument("train: series with no values");
  if (opt.batch == 0) throw std::invalid_argument("train: batch must be >= 1");
  if (p.shape.value_dim != 1) throw std::invalid_argument("train: expected scalar series");

  RngStream root(opt.seed);
  RngStream draw = root.substream("train");
  RngStream probe_root = root.substream("probe");

  AdamConfig acfg;
  acfg.lr = opt.lr;
  Adam adam(acfg);
  ModelParameters grad = model_zeros_like(p);

  TrainLog log;
  std::size_t bad_streak = 0;

  for (std::size_t step = 1; step <= opt.steps; ++step) {
    std::vector<TrainingInstance> batch;
    batch.reserve(opt.batch);
    for (std::size_t b = 0; b < opt.batch; ++b) {
      const TrainSeries& ts = data[draw.uniform_index(data.size())];
      const std::size_t t0 = 1 + draw.uniform_index(ts.values.size());
      TrainingInstance inst;
      inst.ctx = ts.context;
      for (std::size_t t = 0; t + 1 < t0; ++t) inst.prefix.push_back(Vec{ts.values[t]});
      inst.target = Vec{ts.values[t0 - 1]};
      inst.level = 1 + draw.uniform_index(sched.steps());
      inst.eps = Vec{draw.gaussian()};
      batch.push_back(std::move(inst));
    }

    double loss = std::numeric_limits<double>::quiet_NaN();
    bool ok = true;
    zero_params(grad);
    try {
      loss = loss_and_grads(p, sched, batch, grad);
    } catch (const std::runtime_error&) {
      ok = false;
    }
    if (!ok || !std::isfinite(loss)) {
      ++bad_streak;
      log.losses.push_back(std::numeric_limits<double>::quiet_NaN());
      if (bad_streak > opt.nonfinite_limit)
        throw std::runtime_error("train: " + std::to_string(bad_streak) +
                                 " consecutive non-finite losses at step " + std::to_string(step));
      log.steps_run = step;
      continue;
    }
    bad_streak = 0;
    adam.step(p, grad);
    log.losses.push_back(loss);
    log.steps_run = step;

    if (opt.enforce_interval != 0 && step % opt.enforce_interval == 0) {
      std::vector<StateSample> states = probe_states(p, data, probe_root.substream(step), 8);
      GateRanges g = widen_gate_ranges(measure_gates(p.trans, states));
      EnforceOutcome out = enforce(p.trans, opt.target_kappa, opt.lp, g);
      ++log.enforce_calls;
      log.enforce_rounds += static_cast<std::size_t>(out.rounds);
      log.hook_gates = g;
    }

    if (opt.plateau_window != 0 && step >= 2 * opt.plateau_window &&
        step % opt.plateau_window == 0) {
      const double recent = window_mean(log.losses, step - opt.plateau_window, step);
      const double previous = window_mean(log.losses, step - 2 * opt.plateau_window,
                                          step - opt.plateau_window);
      // Plateau: under 0.5% relative improvement across consecutive windows.
      if (std::isfinite(recent) && std::isfinite(previous) && recent > 0.995 * previous) {
        log.stopped_on_plateau = true;
        break;
      }
    }
  }

  const std::size_t n = log.losses.size();
  const std::size_t tail = opt.plateau_window == 0 ? n : std::min(n, opt.plateau_window);
  log.final_loss = n == 0 ? 0.0 : window_mean(log.losses, n - tail, n);
  return log;
}

}  // namespace lifecast
