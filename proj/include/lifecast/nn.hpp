#pragma once

#include <cstddef>

#include "lifecast/linalg.hpp"
#include "lifecast/rng.hpp"

namespace lifecast {

double sigmoid(double x);

// GRU cell:
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   hcand = tanh(Wh x + Uh (r.h) + bh)
//   h' = (1 - z) . h + z . hcand
struct GruParams {
  Matrix Wz, Wr, Wh;  // hidden x input
  Matrix Uz, Ur, Uh;  // hidden x hidden
  Vec bz, br, bh;

  std::size_t hidden() const { return Wz.rows(); }
  std::size_t input() const { return Wz.cols(); }
};

GruParams gru_init(std::size_t input, std::size_t hidden, double scale, RngStream rng);
GruParams gru_zeros_like(const GruParams& p);

// Everything the backward pass (and gate-range monitoring) needs.
struct GruCache {
  Vec x, h_prev;
  Vec z, r, hcand, rh;  // rh = r.h_prev
};

struct GruStep {
  Vec h;
  GruCache cache;
};

GruStep gru_step(const GruParams& p, const Vec& h_prev, const Vec& x);

// Accumulates parameter gradients into `grad` and writes the gradients with
// respect to the step inputs into dh_prev / dx (overwritten, not accumulated).
void gru_backward(const GruParams& p, const GruCache& c, const Vec& dh_new, GruParams& grad,
                  Vec& dh_prev, Vec& dx);

// Transformer-style sinusoidal position features of the diffusion step index.
// width must be even; pair i holds sin / cos of n / 10000^(2i/width).
Vec sinusoidal_embedding(int n, std::size_t width);

}  // namespace lifecast
