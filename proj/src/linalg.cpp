#include "lifecast/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lifecast/rng.hpp"

namespace lifecast {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

void Matrix::fill(double v) {
  for (double& x : a_) x = v;
}

void Matrix::scale(double s) {
  for (double& x : a_) x *= s;
}

bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void require_finite(const Vec& v, const char* what) {
  if (!all_finite(v)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

void require_finite(const Matrix& m, const char* what) {
  require_finite(m.raw(), what);
}

Vec matvec(const Matrix& M, const Vec& x) {
  if (x.size() != M.cols()) throw std::invalid_argument("matvec: shape mismatch");
  Vec y(M.rows(), 0.0);
  const double* a = M.data();
  for (std::size_t i = 0; i < M.rows(); ++i) {
    double s = 0.0;
    const double* row = a + i * M.cols();
    for (std::size_t j = 0; j < M.cols(); ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vec tmatvec(const Matrix& M, const Vec& x) {
  if (x.size() != M.rows()) throw std::invalid_argument("tmatvec: shape mismatch");
  Vec y(M.cols(), 0.0);
  const double* a = M.data();
  for (std::size_t i = 0; i < M.rows(); ++i) {
    const double* row = a + i * M.cols();
    for (std::size_t j = 0; j < M.cols(); ++j) y[j] += row[j] * x[i];
  }
  return y;
}

void add_outer(Matrix& M, double s, const Vec& u, const Vec& v) {
  if (u.size() != M.rows() || v.size() != M.cols())
    throw std::invalid_argument("add_outer: shape mismatch");
  double* a = M.data();
  for (std::size_t i = 0; i < M.rows(); ++i) {
    double su = s * u[i];
    double* row = a + i * M.cols();
    for (std::size_t j = 0; j < M.cols(); ++j) row[j] += su * v[j];
  }
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

void axpy(double s, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

Vec hadamard(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hadamard: size mismatch");
  Vec c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * b[i];
  return c;
}

Vec concat(const Vec& a, const Vec& b) {
  Vec c;
  c.reserve(a.size() + b.size());
  c.insert(c.end(), a.begin(), a.end());
  c.insert(c.end(), b.begin(), b.end());
  return c;
}

double spectral_norm(const Matrix& M, int max_iters, double tol) {
  if (M.rows() == 0 || M.cols() == 0) return 0.0;
  RngStream rng(0x5eedu);
  Vec v(M.cols());
  for (double& x : v) x = rng.gaussian();
  double nv = norm2(v);
  if (nv == 0.0) return 0.0;
  for (double& x : v) x /= nv;

  double sigma = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vec u = matvec(M, v);
    double nu = norm2(u);
    if (nu == 0.0) return 0.0;
    for (double& x : u) x /= nu;
    v = tmatvec(M, u);
    double s = norm2(v);
    if (s == 0.0) return 0.0;
    for (double& x : v) x /= s;
    if (std::abs(s - sigma) <= tol * std::max(1.0, s)) return s;
    sigma = s;
  }
  return sigma;
}

bool spectral_clip(Matrix& M, double cap) {
  if (cap < 0) throw std::invalid_argument("spectral_clip: negative cap");
  double s = spectral_norm(M);
  if (s <= cap) return false;
  M.scale(cap / s);
  return true;
}

}  // namespace lifecast
