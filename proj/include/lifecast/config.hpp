#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lifecast/metrics.hpp"

namespace lifecast {

// Every tunable of the pipeline, with desk-scale defaults. Loaded from a flat
// key = value text file ('#' comments); unknown keys are rejected so typos
// fail loudly. Ranges are validated before any run.
struct RunConfig {
  // Reference selection and context encoding
  std::size_t refs_k = 5;
  double gamma = 1.0;
  std::string fusion = "learned";  // "scaled" | "learned"

  // Model dimensions
  std::size_t hidden_dim = 16;
  std::size_t ref_dim = 8;
  std::size_t static_dim = 8;
  std::size_t channels = 16;
  std::size_t blocks = 3;
  std::size_t window = 8;
  std::size_t embed_width = 32;
  std::size_t static_depth = 2;
  double init_scale = 0.5;

  // Diffusion schedule and sampling
  std::size_t diffusion_steps = 50;
  double beta_start = 1e-4;
  double beta_end = 0.1;
  double value_clip = 5.0;

  // Training
  double lr = 1e-3;
  std::size_t train_steps = 6000;
  std::size_t batch = 8;
  std::size_t plateau_window = 2000;
  std::size_t enforce_interval = 100;
  double target_kappa = 0.8;
  double lp = 1.0;
  std::size_t nonfinite_limit = 5;

  // Evaluation protocol
  std::string mode = "pre-launch";  // "pre-launch" | "post-launch"
  std::size_t t0 = 1;
  std::size_t horizon = 16;
  std::size_t samples = 100;
  std::size_t stride = 1;
  double train_frac = 0.8;
  std::string bands = "1-8,9-16";

  std::uint64_t seed = 1;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
void validate_config(const RunConfig& cfg);

// "1-8,9-16" -> step-index bands [0,8) and [8,16), labels kept verbatim.
std::vector<HorizonBand> parse_bands(const std::string& spec);

// The full key list with current values, suitable as a config file.
std::string config_to_text(const RunConfig& cfg);

}  // namespace lifecast
