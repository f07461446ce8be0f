#pragma once

#include <cstddef>
#include <vector>

#include "lifecast/context.hpp"
#include "lifecast/model.hpp"
#include "lifecast/parallel.hpp"
#include "lifecast/rng.hpp"

namespace lifecast {

// Variance schedule. Index convention: beta[i] is the step n = i + 1 rate,
// alpha_bar(n) the cumulative signal fraction with alpha_bar(0) = 1.
struct NoiseSchedule {
  Vec beta;
  Vec alpha;
  Vec alpha_bar;

  static NoiseSchedule linear(std::size_t steps, double beta_start, double beta_end);

  std::size_t steps() const { return beta.size(); }
  double abar(std::size_t n) const { return n == 0 ? 1.0 : alpha_bar[n - 1]; }
};

// x^n = sqrt(abar_n) x0 + sqrt(1 - abar_n) eps
Vec forward_sample(const NoiseSchedule& s, std::size_t n, const Vec& x0, const Vec& eps);

// Mean and (isotropic) variance of q(x^{n-1} | x^n, x0).
struct GaussMoments {
  Vec mean;
  double var = 0.0;
};
GaussMoments posterior_moments(const NoiseSchedule& s, std::size_t n, const Vec& x0,
                               const Vec& xn);

// Mean of the reverse kernel from the predicted noise.
Vec reverse_mean(const NoiseSchedule& s, std::size_t n, const Vec& xn, const Vec& eps_hat);

double posterior_var(const NoiseSchedule& s, std::size_t n);

// One supervised example for the denoising loss: a focal product's context, a
// revealed prefix, the clean target value at the forecast origin, plus a noise
// level and an injected noise draw.
struct TrainingInstance {
  ContextInput ctx;
  std::vector<Vec> prefix;  // x_1 .. x_{t0-1}
  Vec target;               // x_{t0}
  std::size_t level = 1;    // diffusion step n
  Vec eps;
};

// Mean squared-noise-error over the batch; accumulates parameter gradients
// into `grad` (caller provides zeros). Gradients flow through the score
// network, the transition recurrence, and the context encoder jointly.
double loss_and_grads(const ModelParameters& p, const NoiseSchedule& s,
                      const std::vector<TrainingInstance>& batch, ModelParameters& grad);

// The window fed to the score network: the last (window-1) history rows,
// zero-padded on the left, with `current` as the newest row.
Matrix assemble_window(const std::vector<Vec>& history, const Vec& current, std::size_t window,
                       std::size_t value_dim);

// Advances the recurrent state over observed values.
Vec advance_state(const ModelParameters& p, const Vec& h, const Vec& c, const Vec& x);

// Full reverse chain for the next value given recurrent state and history.
// Each intermediate state is clamped to [-clip, clip].
Vec sample_next(const ModelParameters& p, const NoiseSchedule& s, const Vec& h,
                const std::vector<Vec>& history, const Vec& c, RngStream& rng, double clip);

struct RolloutResult {
  // paths[r] is horizon x value_dim.
  std::vector<Matrix> paths;
};

// M independent continuations. Rollout r uses rng.substream(r), so results
// are identical whichever execution policy runs them.
RolloutResult rollout(const ModelParameters& p, const NoiseSchedule& s, const ContextState& ctx,
                      const std::vector<Vec>& prefix, std::size_t horizon, std::size_t n_paths,
                      const RngStream& rng, double clip, Exec exec);

}  // namespace lifecast
