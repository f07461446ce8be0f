#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lifecast/diffusion.hpp"
#include "lifecast/stability.hpp"

namespace lifecast {

// One training example: a transformed trajectory plus its (leave-focal-out)
// conditioning inputs, prepared by the caller.
struct TrainSeries {
  Vec values;
  ContextInput context;
};

struct TrainOptions {
  std::size_t steps = 6000;
  std::size_t batch = 8;
  double lr = 1e-3;
  std::size_t enforce_interval = 100;  // 0 disables the stability hook
  double target_kappa = 0.8;
  double lp = 1.0;
  std::size_t plateau_window = 2000;  // 0 disables early stopping
  std::size_t nonfinite_limit = 5;    // consecutive bad losses before aborting
  std::uint64_t seed = 1;
};

struct TrainLog {
  std::vector<double> losses;  // per optimizer step
  std::size_t steps_run = 0;
  bool stopped_on_plateau = false;
  std::size_t enforce_calls = 0;
  std::size_t enforce_rounds = 0;  // total spectral-shrink rounds applied
  GateRanges hook_gates;           // widened ranges used by the last hook
  double final_loss = 0.0;         // mean loss over the trailing window
};

// Denoising-loss training (noise level, origin, and noise draws all from the
// seeded stream): sample a series and an origin t0, roll the recurrent state
// through the revealed prefix, noise the origin value, and take a joint
// gradient step on the squared noise-prediction error. Every
// `enforce_interval` steps the transition GRU is spectrally clipped toward
// `target_kappa` using gate ranges measured on teacher-forced prefix states
// (widened 10%). Stops on the step budget or a loss plateau; aborts after
// `nonfinite_limit` consecutive non-finite losses.
TrainLog train(ModelParameters& p, const NoiseSchedule& sched,
               const std::vector<TrainSeries>& data, const TrainOptions& opt);

}  // namespace lifecast
