#include "lifecast/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lifecast {

NoiseSchedule NoiseSchedule::linear(std::size_t steps, double beta_start, double beta_end) {
  if (steps == 0) throw std::invalid_argument("schedule: need at least one step");
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end)
    throw std::invalid_argument("schedule: betas must satisfy 0 < start <= end < 1");
  NoiseSchedule s;
  s.beta.resize(steps);
  s.alpha.resize(steps);
  s.alpha_bar.resize(steps);
  double prod = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    s.beta[i] = beta_start + (beta_end - beta_start) * frac;
    s.alpha[i] = 1.0 - s.beta[i];
    prod *= s.alpha[i];
    s.alpha_bar[i] = prod;
  }
  return s;
}

namespace {

void check_level(const NoiseSchedule& s, std::size_t n) {
  if (n == 0 || n > s.steps()) throw std::invalid_argument("diffusion: level out of range");
}

}  // namespace

Vec forward_sample(const NoiseSchedule& s, std::size_t n, const Vec& x0, const Vec& eps) {
  check_level(s, n);
  if (x0.size() != eps.size()) throw std::invalid_argument("forward_sample: size mismatch");
  double a = std::sqrt(s.abar(n));
  double b = std::sqrt(1.0 - s.abar(n));
  Vec x(x0.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = a * x0[i] + b * eps[i];
  return x;
}

GaussMoments posterior_moments(const NoiseSchedule& s, std::size_t n, const Vec& x0,
                               const Vec& xn) {
  check_level(s, n);
  if (x0.size() != xn.size()) throw std::invalid_argument("posterior_moments: size mismatch");
  double abar_n = s.abar(n);
  double abar_prev = s.abar(n - 1);
  double beta = s.beta[n - 1];
  double c0 = std::sqrt(abar_prev) * beta / (1.0 - abar_n);
  double cn = std::sqrt(s.alpha[n - 1]) * (1.0 - abar_prev) / (1.0 - abar_n);
  GaussMoments g;
  g.mean.resize(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) g.mean[i] = c0 * x0[i] + cn * xn[i];
  g.var = (1.0 - abar_prev) / (1.0 - abar_n) * beta;
  return g;
}

double posterior_var(const NoiseSchedule& s, std::size_t n) {
  check_level(s, n);
  return (1.0 - s.abar(n - 1)) / (1.0 - s.abar(n)) * s.beta[n - 1];
}

Vec reverse_mean(const NoiseSchedule& s, std::size_t n, const Vec& xn, const Vec& eps_hat) {
  check_level(s, n);
  if (xn.size() != eps_hat.size()) throw std::invalid_argument("reverse_mean: size mismatch");
  double beta = s.beta[n - 1];
  double scale = 1.0 / std::sqrt(s.alpha[n - 1]);
  double coef = beta / std::sqrt(1.0 - s.abar(n));
  Vec mu(xn.size());
  for (std::size_t i = 0; i < xn.size(); ++i) mu[i] = scale * (xn[i] - coef * eps_hat[i]);
  return mu;
}

Matrix assemble_window(const std::vector<Vec>& history, const Vec& current, std::size_t window,
                       std::size_t value_dim) {
  if (window == 0) throw std::invalid_argument("assemble_window: zero window");
  Matrix w(window, value_dim, 0.0);
  for (std::size_t d = 0; d < value_dim; ++d) w(window - 1, d) = current[d];
  std::size_t take = std::min(history.size(), window - 1);
  for (std::size_t j = 0; j < take; ++j) {
    const Vec& row = history[history.size() - take + j];
    for (std::size_t d = 0; d < value_dim; ++d) w(window - 1 - take + j, d) = row[d];
  }
  return w;
}

Vec advance_state(const ModelParameters& p, const Vec& h, const Vec& c, const Vec& x) {
  return gru_step(p.trans, h, concat(x, c)).h;
}

double loss_and_grads(const ModelParameters& p, const NoiseSchedule& s,
                      const std::vector<TrainingInstance>& batch, ModelParameters& grad) {
  if (batch.empty()) throw std::invalid_argument("loss_and_grads: empty batch");
  const ModelShape& sh = p.shape;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;

  for (const TrainingInstance& inst : batch) {
    check_level(s, inst.level);
    if (inst.target.size() != sh.value_dim || inst.eps.size() != sh.value_dim)
      throw std::invalid_argument("loss_and_grads: bad target/eps dim");
    require_finite(inst.target, "loss_and_grads: target");

    ContextCache ctx_cache;
    ContextState ctx = build_context(p, inst.ctx, ctx_cache);

    Vec h = ctx.h0;
    std::vector<GruCache> steps;
    steps.reserve(inst.prefix.size());
    for (const Vec& x : inst.prefix) {
      GruStep st = gru_step(p.trans, h, concat(x, ctx.c));
      h = st.h;
      steps.push_back(std::move(st.cache));
    }

    Vec xn = forward_sample(s, inst.level, inst.target, inst.eps);
    Matrix window = assemble_window(inst.prefix, xn, sh.window, sh.value_dim);
    Vec cond = concat(h, sinusoidal_embedding(static_cast<int>(inst.level), sh.embed_width));

    ScoreCache sc;
    Vec eps_hat = score_forward(p.score, window, cond, sc);

    Vec dout(sh.value_dim);
    for (std::size_t d = 0; d < sh.value_dim; ++d) {
      double r = eps_hat[d] - inst.eps[d];
      loss += r * r * inv_b;
      dout[d] = 2.0 * r * inv_b;
    }

    Vec dcond;
    score_backward(p.score, sc, dout, grad.score, dcond);

    Vec dh(dcond.begin(), dcond.begin() + sh.hidden_dim);
    Vec dc(sh.context_dim(), 0.0);
    for (std::size_t t = steps.size(); t-- > 0;) {
      Vec dh_prev, dx;
      gru_backward(p.trans, steps[t], dh, grad.trans, dh_prev, dx);
      for (std::size_t j = 0; j < dc.size(); ++j) dc[j] += dx[sh.value_dim + j];
      dh = std::move(dh_prev);
    }
    context_backward(p, ctx_cache, dc, dh, grad);
  }

  if (!std::isfinite(loss)) throw std::runtime_error("loss_and_grads: non-finite loss");
  return loss;
}

Vec sample_next(const ModelParameters& p, const NoiseSchedule& s, const Vec& h,
                const std::vector<Vec>& history, const Vec& c, RngStream& rng, double clip) {
  const ModelShape& sh = p.shape;
  if (clip <= 0.0) throw std::invalid_argument("sample_next: clip must be positive");
  Vec x(sh.value_dim);
  for (double& v : x) v = rng.gaussian();

  for (std::size_t n = s.steps(); n >= 1; --n) {
    Matrix window = assemble_window(history, x, sh.window, sh.value_dim);
    Vec cond = concat(h, sinusoidal_embedding(static_cast<int>(n), sh.embed_width));
    Vec eps_hat = score_forward(p.score, window, cond);
    Vec mu = reverse_mean(s, n, x, eps_hat);
    if (n > 1) {
      double sd = std::sqrt(posterior_var(s, n));
      for (std::size_t d = 0; d < sh.value_dim; ++d) x[d] = mu[d] + sd * rng.gaussian();
    } else {
      x = mu;
    }
    for (double& v : x) v = std::clamp(v, -clip, clip);
  }
  return x;
}

RolloutResult rollout(const ModelParameters& p, const NoiseSchedule& s, const ContextState& ctx,
                      const std::vector<Vec>& prefix, std::size_t horizon, std::size_t n_paths,
                      const RngStream& rng, double clip, Exec exec) {
  Vec h_start = ctx.h0;
  for (const Vec& x : prefix) h_start = advance_state(p, h_start, ctx.c, x);

  RolloutResult out;
  out.paths.assign(n_paths, Matrix(horizon, p.shape.value_dim));
  parallel_for(exec, n_paths, [&](std::size_t r) {
    RngStream rr = rng.substream(r);
    Vec h = h_start;
    std::vector<Vec> hist = prefix;
    for (std::size_t j = 0; j < horizon; ++j) {
      Vec x = sample_next(p, s, h, hist, ctx.c, rr, clip);
      for (std::size_t d = 0; d < p.shape.value_dim; ++d) out.paths[r](j, d) = x[d];
      hist.push_back(x);
      h = advance_state(p, h, ctx.c, x);
    }
  });
  return out;
}

}  // namespace lifecast
