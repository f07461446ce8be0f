#include "lifecast/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace lifecast {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, double scale, RngStream& rng) {
  Matrix m(rows, cols);
  double s = scale / std::sqrt(static_cast<double>(cols));
  for (double& x : m.raw()) x = s * rng.gaussian();
  return m;
}

}  // namespace

GruParams gru_init(std::size_t input, std::size_t hidden, double scale, RngStream rng) {
  GruParams p;
  RngStream rz = rng.substream("Wz"), rr = rng.substream("Wr"), rh = rng.substream("Wh");
  RngStream uz = rng.substream("Uz"), ur = rng.substream("Ur"), uh = rng.substream("Uh");
  p.Wz = random_matrix(hidden, input, scale, rz);
  p.Wr = random_matrix(hidden, input, scale, rr);
  p.Wh = random_matrix(hidden, input, scale, rh);
  p.Uz = random_matrix(hidden, hidden, scale, uz);
  p.Ur = random_matrix(hidden, hidden, scale, ur);
  p.Uh = random_matrix(hidden, hidden, scale, uh);
  p.bz.assign(hidden, 0.0);
  p.br.assign(hidden, 0.0);
  p.bh.assign(hidden, 0.0);
  return p;
}

GruParams gru_zeros_like(const GruParams& p) {
  GruParams g;
  g.Wz = Matrix(p.Wz.rows(), p.Wz.cols());
  g.Wr = Matrix(p.Wr.rows(), p.Wr.cols());
  g.Wh = Matrix(p.Wh.rows(), p.Wh.cols());
  g.Uz = Matrix(p.Uz.rows(), p.Uz.cols());
  g.Ur = Matrix(p.Ur.rows(), p.Ur.cols());
  g.Uh = Matrix(p.Uh.rows(), p.Uh.cols());
  g.bz.assign(p.bz.size(), 0.0);
  g.br.assign(p.br.size(), 0.0);
  g.bh.assign(p.bh.size(), 0.0);
  return g;
}

GruStep gru_step(const GruParams& p, const Vec& h_prev, const Vec& x) {
  if (h_prev.size() != p.hidden()) throw std::invalid_argument("gru_step: bad hidden size");
  if (x.size() != p.input()) throw std::invalid_argument("gru_step: bad input size");
  const std::size_t m = p.hidden();

  GruStep out;
  GruCache& c = out.cache;
  c.x = x;
  c.h_prev = h_prev;

  Vec az = matvec(p.Wz, x);
  axpy(1.0, matvec(p.Uz, h_prev), az);
  axpy(1.0, p.bz, az);
  Vec ar = matvec(p.Wr, x);
  axpy(1.0, matvec(p.Ur, h_prev), ar);
  axpy(1.0, p.br, ar);

  c.z.resize(m);
  c.r.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    c.z[i] = sigmoid(az[i]);
    c.r[i] = sigmoid(ar[i]);
  }
  c.rh = hadamard(c.r, h_prev);

  Vec ah = matvec(p.Wh, x);
  axpy(1.0, matvec(p.Uh, c.rh), ah);
  axpy(1.0, p.bh, ah);
  c.hcand.resize(m);
  for (std::size_t i = 0; i < m; ++i) c.hcand[i] = std::tanh(ah[i]);

  out.h.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    out.h[i] = (1.0 - c.z[i]) * h_prev[i] + c.z[i] * c.hcand[i];
  return out;
}

void gru_backward(const GruParams& p, const GruCache& c, const Vec& dh_new, GruParams& grad,
                  Vec& dh_prev, Vec& dx) {
  const std::size_t m = p.hidden();
  if (dh_new.size() != m) throw std::invalid_argument("gru_backward: bad dh size");

  Vec dz(m), dhc(m);
  dh_prev.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    dz[i] = dh_new[i] * (c.hcand[i] - c.h_prev[i]);
    dhc[i] = dh_new[i] * c.z[i];
    dh_prev[i] = dh_new[i] * (1.0 - c.z[i]);
  }

  Vec dah(m), daz(m), dar(m);
  for (std::size_t i = 0; i < m; ++i) dah[i] = dhc[i] * (1.0 - c.hcand[i] * c.hcand[i]);

  add_outer(grad.Wh, 1.0, dah, c.x);
  add_outer(grad.Uh, 1.0, dah, c.rh);
  axpy(1.0, dah, grad.bh);
  Vec drh = tmatvec(p.Uh, dah);
  Vec dr(m);
  for (std::size_t i = 0; i < m; ++i) {
    dr[i] = drh[i] * c.h_prev[i];
    dh_prev[i] += drh[i] * c.r[i];
  }

  for (std::size_t i = 0; i < m; ++i) {
    daz[i] = dz[i] * c.z[i] * (1.0 - c.z[i]);
    dar[i] = dr[i] * c.r[i] * (1.0 - c.r[i]);
  }
  add_outer(grad.Wz, 1.0, daz, c.x);
  add_outer(grad.Uz, 1.0, daz, c.h_prev);
  axpy(1.0, daz, grad.bz);
  add_outer(grad.Wr, 1.0, dar, c.x);
  add_outer(grad.Ur, 1.0, dar, c.h_prev);
  axpy(1.0, dar, grad.br);

  axpy(1.0, tmatvec(p.Uz, daz), dh_prev);
  axpy(1.0, tmatvec(p.Ur, dar), dh_prev);

  dx = tmatvec(p.Wz, daz);
  axpy(1.0, tmatvec(p.Wr, dar), dx);
  axpy(1.0, tmatvec(p.Wh, dah), dx);
}

Vec sinusoidal_embedding(int n, std::size_t width) {
  if (width == 0 || width % 2 != 0)
    throw std::invalid_argument("sinusoidal_embedding: width must be positive and even");
  Vec e(width);
  for (std::size_t i = 0; i < width / 2; ++i) {
    double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(width));
    e[2 * i] = std::sin(n * freq);
    e[2 * i + 1] = std::cos(n * freq);
  }
  return e;
}

}  // namespace lifecast
