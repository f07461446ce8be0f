#pragma once

#include <cstddef>
#include <vector>

namespace lifecast {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. Every operation checks shapes and throws
// std::invalid_argument on mismatch.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return a_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }
  std::vector<double>& raw() { return a_; }
  const std::vector<double>& raw() const { return a_; }

  void fill(double v);
  void scale(double s);

  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> a_;
};

// Boundary validation: throws std::invalid_argument naming `what` if any
// entry is NaN or infinite.
void require_finite(const Vec& v, const char* what);
void require_finite(const Matrix& m, const char* what);
bool all_finite(const Vec& v);

// y = M x
Vec matvec(const Matrix& M, const Vec& x);
// y = M^T x
Vec tmatvec(const Matrix& M, const Vec& x);
// M += s * u v^T
void add_outer(Matrix& M, double s, const Vec& u, const Vec& v);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& v);
// y += s * x
void axpy(double s, const Vec& x, Vec& y);
Vec hadamard(const Vec& a, const Vec& b);
Vec concat(const Vec& a, const Vec& b);

// Largest singular value by power iteration on M^T M with a seeded start
// vector. Defaults: 100 iterations, relative tolerance 1e-9 (early exit).
double spectral_norm(const Matrix& M, int max_iters = 100, double tol = 1e-9);

// Rescales M in place so its spectral norm is at most `cap`. Returns true if
// a rescale happened; below-cap matrices are returned bit-identical.
bool spectral_clip(Matrix& M, double cap);

}  // namespace lifecast
