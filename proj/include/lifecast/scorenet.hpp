#pragma once

#include <cstddef>
#include <vector>

#include "lifecast/linalg.hpp"
#include "lifecast/rng.hpp"

namespace lifecast {

// Noise predictor over a fixed-width window of recent values. The window is
// lifted to `channels` channels, passed through `blocks` residual blocks of
// dilated causal convolutions (kernel size 2, dilation 2^l, tanh), with the
// conditioning vector broadcast-added to every block via a per-block affine
// map, and read out at the last time position.
struct ScoreNetShape {
  std::size_t value_dim = 1;
  std::size_t channels = 16;
  std::size_t blocks = 3;
  std::size_t window = 8;
  std::size_t cond_dim = 0;  // recurrent state + step embedding
};

struct ScoreBlock {
  std::vector<Matrix> taps;  // taps[j]: channels x channels, lag j * dilation
  Vec bias;
  Matrix cond;  // channels x cond_dim
};

struct ScoreNetParams {
  ScoreNetShape shape;
  Matrix in_w;  // channels x value_dim
  Vec in_b;
  std::vector<ScoreBlock> blocks;
  Matrix out_w;  // value_dim x channels
  Vec out_b;

  static std::size_t dilation(std::size_t block) { return std::size_t{1} << block; }
  // Positions before the last that can influence the output.
  std::size_t receptive_field() const;
};

ScoreNetParams scorenet_init(const ScoreNetShape& shape, double scale, RngStream rng);
ScoreNetParams scorenet_zeros_like(const ScoreNetParams& p);

struct ScoreCache {
  Matrix window;  // window x value_dim, rows oldest..newest
  Vec cond;
  std::vector<Matrix> acts;    // tanh outputs per block, channels x window
  std::vector<Matrix> inputs;  // block inputs, channels x window (inputs[0] = lifted window)
};

// window rows are oldest..newest; the output predicts the noise component of
// the newest row.
Vec score_forward(const ScoreNetParams& p, const Matrix& window, const Vec& cond);
Vec score_forward(const ScoreNetParams& p, const Matrix& window, const Vec& cond, ScoreCache& cache);

// Accumulates into `grad`; returns nothing. dcond is overwritten.
void score_backward(const ScoreNetParams& p, const ScoreCache& cache, const Vec& dout,
                    ScoreNetParams& grad, Vec& dcond);

}  // namespace lifecast
