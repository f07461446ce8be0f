#include "lifecast/scorenet.hpp"

#include <cmath>
#include <stdexcept>

namespace lifecast {

namespace {

constexpr std::size_t kKernel = 2;

Matrix random_matrix(std::size_t rows, std::size_t cols, double scale, RngStream& rng) {
  Matrix m(rows, cols);
  double s = scale / std::sqrt(static_cast<double>(cols));
  for (double& x : m.raw()) x = s * rng.gaussian();
  return m;
}

}  // namespace

std::size_t ScoreNetParams::receptive_field() const {
  std::size_t rf = 0;
  for (std::size_t l = 0; l < shape.blocks; ++l) rf += (kKernel - 1) * dilation(l);
  return rf;
}

ScoreNetParams scorenet_init(const ScoreNetShape& shape, double scale, RngStream rng) {
  if (shape.window == 0 || shape.channels == 0 || shape.value_dim == 0)
    throw std::invalid_argument("scorenet_init: zero dimension");
  ScoreNetParams p;
  p.shape = shape;
  RngStream ri = rng.substream("in");
  p.in_w = random_matrix(shape.channels, shape.value_dim, scale, ri);
  p.in_b.assign(shape.channels, 0.0);
  for (std::size_t l = 0; l < shape.blocks; ++l) {
    ScoreBlock b;
    for (std::size_t j = 0; j < kKernel; ++j) {
      RngStream rk = rng.substream("tap" + std::to_string(l) + "_" + std::to_string(j));
      b.taps.push_back(random_matrix(shape.channels, shape.channels, scale / kKernel, rk));
    }
    b.bias.assign(shape.channels, 0.0);
    RngStream rc = rng.substream("cond" + std::to_string(l));
    b.cond = random_matrix(shape.channels, shape.cond_dim, scale, rc);
    p.blocks.push_back(std::move(b));
  }
  RngStream ro = rng.substream("out");
  // Small output head so the initial noise prediction is near zero.
  p.out_w = random_matrix(shape.value_dim, shape.channels, 0.1 * scale, ro);
  p.out_b.assign(shape.value_dim, 0.0);
  return p;
}

ScoreNetParams scorenet_zeros_like(const ScoreNetParams& p) {
  ScoreNetParams g;
  g.shape = p.shape;
  g.in_w = Matrix(p.in_w.rows(), p.in_w.cols());
  g.in_b.assign(p.in_b.size(), 0.0);
  for (const ScoreBlock& b : p.blocks) {
    ScoreBlock z;
    for (const Matrix& t : b.taps) z.taps.emplace_back(t.rows(), t.cols());
    z.bias.assign(b.bias.size(), 0.0);
    z.cond = Matrix(b.cond.rows(), b.cond.cols());
    g.blocks.push_back(std::move(z));
  }
  g.out_w = Matrix(p.out_w.rows(), p.out_w.cols());
  g.out_b.assign(p.out_b.size(), 0.0);
  return g;
}

Vec score_forward(const ScoreNetParams& p, const Matrix& window, const Vec& cond) {
  ScoreCache cache;
  return score_forward(p, window, cond, cache);
}

Vec score_forward(const ScoreNetParams& p, const Matrix& window, const Vec& cond,
                  ScoreCache& cache) {
  const std::size_t W = p.shape.window;
  const std::size_t C = p.shape.channels;
  if (window.rows() != W || window.cols() != p.shape.value_dim)
    throw std::invalid_argument("score_forward: bad window shape");
  if (cond.size() != p.shape.cond_dim)
    throw std::invalid_argument("score_forward: bad cond size");

  cache.window = window;
  cache.cond = cond;
  cache.acts.clear();
  cache.inputs.clear();

  // Lift rows to channels: u(:, t) = in_w * window(t, :) + in_b.
  Matrix u(C, W);
  for (std::size_t t = 0; t < W; ++t)
    for (std::size_t c = 0; c < C; ++c) {
      double s = p.in_b[c];
      for (std::size_t d = 0; d < p.shape.value_dim; ++d) s += p.in_w(c, d) * window(t, d);
      u(c, t) = s;
    }
  cache.inputs.push_back(u);

  for (std::size_t l = 0; l < p.shape.blocks; ++l) {
    const ScoreBlock& b = p.blocks[l];
    const std::size_t dil = ScoreNetParams::dilation(l);
    Vec cv = matvec(b.cond, cond);
    Matrix pre(C, W);
    for (std::size_t t = 0; t < W; ++t)
      for (std::size_t c = 0; c < C; ++c) pre(c, t) = b.bias[c] + cv[c];
    for (std::size_t j = 0; j < kKernel; ++j) {
      const std::size_t lag = j * dil;
      const Matrix& K = b.taps[j];
      for (std::size_t t = lag; t < W; ++t)
        for (std::size_t c = 0; c < C; ++c) {
          double s = 0.0;
          for (std::size_t d = 0; d < C; ++d) s += K(c, d) * u(d, t - lag);
          pre(c, t) += s;
        }
    }
    Matrix a(C, W);
    for (std::size_t i = 0; i < a.size(); ++i) a.raw()[i] = std::tanh(pre.raw()[i]);
    cache.acts.push_back(a);
    for (std::size_t i = 0; i < u.size(); ++i) u.raw()[i] += a.raw()[i];
    cache.inputs.push_back(u);
  }

  Vec out(p.shape.value_dim);
  for (std::size_t d = 0; d < p.shape.value_dim; ++d) {
    double s = p.out_b[d];
    for (std::size_t c = 0; c < C; ++c) s += p.out_w(d, c) * u(c, W - 1);
    out[d] = s;
  }
  return out;
}

void score_backward(const ScoreNetParams& p, const ScoreCache& cache, const Vec& dout,
                    ScoreNetParams& grad, Vec& dcond) {
  const std::size_t W = p.shape.window;
  const std::size_t C = p.shape.channels;
  if (dout.size() != p.shape.value_dim)
    throw std::invalid_argument("score_backward: bad dout size");

  dcond.assign(p.shape.cond_dim, 0.0);

  const Matrix& u_last = cache.inputs.back();
  Matrix du(C, W);
  for (std::size_t d = 0; d < p.shape.value_dim; ++d) {
    grad.out_b[d] += dout[d];
    for (std::size_t c = 0; c < C; ++c) {
      grad.out_w(d, c) += dout[d] * u_last(c, W - 1);
      du(c, W - 1) += p.out_w(d, c) * dout[d];
    }
  }

  for (std::size_t li = p.shape.blocks; li-- > 0;) {
    const ScoreBlock& b = p.blocks[li];
    ScoreBlock& gb = grad.blocks[li];
    const std::size_t dil = ScoreNetParams::dilation(li);
    const Matrix& a = cache.acts[li];
    const Matrix& uin = cache.inputs[li];

    Matrix da(C, W);
    for (std::size_t i = 0; i < da.size(); ++i)
      da.raw()[i] = du.raw()[i] * (1.0 - a.raw()[i] * a.raw()[i]);

    Vec da_sum(C, 0.0);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < W; ++t) da_sum[c] += da(c, t);
    axpy(1.0, da_sum, gb.bias);
    add_outer(gb.cond, 1.0, da_sum, cache.cond);
    axpy(1.0, tmatvec(b.cond, da_sum), dcond);

    // du already carries the residual path; add the conv path.
    for (std::size_t j = 0; j < kKernel; ++j) {
      const std::size_t lag = j * dil;
      const Matrix& K = b.taps[j];
      Matrix& gK = gb.taps[j];
      for (std::size_t t = lag; t < W; ++t)
        for (std::size_t c = 0; c < C; ++c) {
          double g = da(c, t);
          if (g == 0.0) continue;
          for (std::size_t d = 0; d < C; ++d) {
            gK(c, d) += g * uin(d, t - lag);
            du(d, t - lag) += K(c, d) * g;
          }
        }
    }
  }

  for (std::size_t t = 0; t < W; ++t)
    for (std::size_t c = 0; c < C; ++c) {
      double g = du(c, t);
      if (g == 0.0) continue;
      grad.in_b[c] += g;
      for (std::size_t d = 0; d < p.shape.value_dim; ++d)
        grad.in_w(c, d) += g * cache.window(t, d);
    }
}

}  // namespace lifecast
