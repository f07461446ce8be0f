#include "lifecast/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lifecast/rng.hpp"

namespace lifecast {

namespace {

Vec unit_gaussian(std::size_t n, RngStream& rng) {
  Vec v(n);
  for (double& x : v) x = rng.gaussian();
  const double s = norm2(v);
  if (s <= 0.0) throw std::runtime_error("degenerate random direction");
  for (double& x : v) x /= s;
  return v;
}

// Columns of the result are an orthonormal basis extending `fixed` (which
// must already have orthonormal columns) to `total` columns, built by
// Gram-Schmidt on seeded Gaussian draws.
Matrix extend_orthonormal(const Matrix& fixed, std::size_t total, RngStream& rng) {
  const std::size_t m = fixed.rows();
  if (total > m) throw std::invalid_argument("extend_orthonormal: too many columns");
  Matrix q(m, total);
  for (std::size_t j = 0; j < fixed.cols(); ++j)
    for (std::size_t i = 0; i < m; ++i) q(i, j) = fixed(i, j);
  for (std::size_t j = fixed.cols(); j < total; ++j) {
    Vec v(m);
    double s = 0.0;
    // Redraw until comfortably independent; almost surely first try.
    for (int attempt = 0; attempt < 64; ++attempt) {
      for (double& x : v) x = rng.gaussian();
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < m; ++i) proj += q(i, k) * v[i];
        for (std::size_t i = 0; i < m; ++i) v[i] -= proj * q(i, k);
      }
      s = norm2(v);
      if (s > 1e-8) break;
    }
    if (s <= 1e-8) throw std::runtime_error("orthonormal extension failed");
    for (std::size_t i = 0; i < m; ++i) q(i, j) = v[i] / s;
  }
  return q;
}

Matrix orthonormal_columns(std::size_t m, std::size_t k, RngStream& rng) {
  return extend_orthonormal(Matrix(m, 0), k, rng);
}

}  // namespace

OracleSystem build_oracle(const OracleConfig& cfg) {
  if (cfg.obs_dim == 0 || cfg.latent_dim < cfg.obs_dim)
    throw std::invalid_argument("oracle: need latent_dim >= obs_dim >= 1");
  if (cfg.rho < 0.0) throw std::invalid_argument("oracle: negative rho");  // rho >= 1 allowed: divergence demos
  if (cfg.lx < 0.0 || cfg.lp < 0.0) throw std::invalid_argument("oracle: negative gain");
  if (cfg.horizon == 0 || cfg.rollouts == 0) throw std::invalid_argument("oracle: empty run");
  if (cfg.pulse_time > cfg.horizon) throw std::invalid_argument("oracle: pulse beyond horizon");

  const std::size_t m = cfg.latent_dim;
  const std::size_t d = cfg.obs_dim;
  RngStream root(cfg.seed);

  OracleSystem sys;
  sys.cfg = cfg;

  RngStream rng_b = root.substream("factors");
  Matrix q = orthonormal_columns(m, m, rng_b);  // full basis; first d columns -> B
  sys.B = Matrix(m, d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < m; ++i) sys.B(i, j) = q(i, j);

  sys.C = Matrix(d, m);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < m; ++j) sys.C(i, j) = cfg.lp * sys.B(j, i);

  // R = B B^T + N Q_c N^T with N the complement basis and Q_c a rotation.
  sys.R = Matrix(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double bbt = 0.0;
      for (std::size_t k = 0; k < d; ++k) bbt += sys.B(i, k) * sys.B(j, k);
      sys.R(i, j) = bbt;
    }
  const std::size_t comp = m - d;
  if (comp > 0) {
    RngStream rng_rot = root.substream("rotation");
    Matrix qc = orthonormal_columns(comp, comp, rng_rot);
    // N Q_c N^T accumulated column by column.
    for (std::size_t a = 0; a < comp; ++a)
      for (std::size_t b = 0; b < comp; ++b) {
        const double w = qc(a, b);
        if (w == 0.0) continue;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j) sys.R(i, j) += q(i, d + a) * w * q(j, d + b);
      }
  }

  RngStream rng_dirs = root.substream("directions");
  sys.mismatch_dir = unit_gaussian(d, rng_dirs);
  sys.drift_dir = unit_gaussian(m, rng_dirs);
  sys.init_err_dir = unit_gaussian(m, rng_dirs);
  // Pulse along the complement of col(B): the observation map is blind to it,
  // so the injected excess decays at exactly rho per step.
  if (comp > 0) {
    sys.pulse_dir.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) sys.pulse_dir[i] = q(i, d);
  } else {
    sys.pulse_dir = sys.init_err_dir;
  }
  return sys;
}

double theorem_bound(double rho, double lx, double lp, double eps_gen, double eps_f, double e0) {
  if (rho < 0.0) throw std::domain_error("theorem_bound: negative rho");
  if (rho >= 1.0) return std::numeric_limits<double>::infinity();
  const double kappa = lp * lx / (1.0 - rho);
  if (kappa >= 1.0) return std::numeric_limits<double>::infinity();
  return (eps_gen + lp * eps_f / (1.0 - rho) + lp * e0) / (1.0 - kappa);
}

OracleSeries simulate(const OracleSystem& sys, Exec exec) {
  const OracleConfig& cfg = sys.cfg;
  const std::size_t m = cfg.latent_dim;
  const std::size_t d = cfg.obs_dim;
  const std::size_t t_max = cfg.horizon;
  const std::size_t n_roll = cfg.rollouts;

  Vec mismatch(d), drift(m), init_err(m);
  for (std::size_t i = 0; i < d; ++i) mismatch[i] = cfg.eps_gen * sys.mismatch_dir[i];
  for (std::size_t i = 0; i < m; ++i) drift[i] = cfg.eps_f * sys.drift_dir[i];
  for (std::size_t i = 0; i < m; ++i) init_err[i] = cfg.e0 * sys.init_err_dir[i];

  RngStream root(cfg.seed);
  RngStream noise_root = root.substream("noise");

  // Per-rollout rows, reduced serially afterwards so the result is bitwise
  // independent of the execution policy.
  std::vector<Vec> delta_rows(n_roll), err_rows(n_roll), obs_rows(n_roll);

  parallel_for(exec, n_roll, [&](std::size_t r) {
    RngStream rng = noise_root.substream(r);
    Vec h_true(m, 0.0);
    Vec h_approx = init_err;  // h*_0 = 0, so the latent error starts at e0
    Vec delta_t(t_max), err_t(t_max), obs_t(t_max);
    Vec noise(d), noise2(d), x_true(d), x_approx(d), gap(d);
    for (std::size_t t = 1; t <= t_max; ++t) {
      // One-step predictive means differ by C e_{t-1} + mismatch; with equal
      // covariances the W1 gap is the distance between the means.
      for (std::size_t i = 0; i < d; ++i) {
        double ce = 0.0;
        for (std::size_t j = 0; j < m; ++j) ce += sys.C(i, j) * (h_approx[j] - h_true[j]);
        gap[i] = ce + mismatch[i];
      }
      delta_t[t - 1] = norm2(gap);

      for (double& z : noise) z = rng.gaussian();
      if (!cfg.common_noise)
        for (double& z : noise2) z = rng.gaussian();
      for (std::size_t i = 0; i < d; ++i) {
        double ct = 0.0, ca = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          ct += sys.C(i, j) * h_true[j];
          ca += sys.C(i, j) * h_approx[j];
        }
        x_true[i] = ct + noise[i];
        x_approx[i] = ca + mismatch[i] + (cfg.common_noise ? noise[i] : noise2[i]);
      }
      double og = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = x_approx[i] - x_true[i];
        og += diff * diff;
      }
      obs_t[t - 1] = std::sqrt(og);

      Vec next_true(m), next_approx(m);
      for (std::size_t i = 0; i < m; ++i) {
        double rt = 0.0, ra = 0.0, bt = 0.0, ba = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          rt += sys.R(i, j) * h_true[j];
          ra += sys.R(i, j) * h_approx[j];
        }
        for (std::size_t k = 0; k < d; ++k) {
          bt += sys.B(i, k) * x_true[k];
          ba += sys.B(i, k) * x_approx[k];
        }
        next_true[i] = cfg.rho * rt + cfg.lx * bt;
        next_approx[i] = cfg.rho * ra + cfg.lx * ba + drift[i];
      }
      if (cfg.pulse_time == t)
        for (std::size_t i = 0; i < m; ++i) next_approx[i] += cfg.pulse_mag * sys.pulse_dir[i];
      h_true = std::move(next_true);
      h_approx = std::move(next_approx);

      double e2 = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double diff = h_approx[i] - h_true[i];
        e2 += diff * diff;
      }
      err_t[t - 1] = std::sqrt(e2);
    }
    delta_rows[r] = std::move(delta_t);
    err_rows[r] = std::move(err_t);
    obs_rows[r] = std::move(obs_t);
  });

  OracleSeries out;
  out.delta_hat.assign(t_max, 0.0);
  out.e_hat.assign(t_max, 0.0);
  out.obs_gap.assign(t_max, 0.0);
  for (std::size_t r = 0; r < n_roll; ++r)
    for (std::size_t t = 0; t < t_max; ++t) {
      out.delta_hat[t] += delta_rows[r][t];
      out.e_hat[t] += err_rows[r][t];
      out.obs_gap[t] += obs_rows[r][t];
    }
  const double inv = 1.0 / static_cast<double>(n_roll);
  for (std::size_t t = 0; t < t_max; ++t) {
    out.delta_hat[t] *= inv;
    out.e_hat[t] *= inv;
    out.obs_gap[t] *= inv;
  }
  out.kappa = cfg.rho < 1.0 ? cfg.lp * cfg.lx / (1.0 - cfg.rho)
                            : std::numeric_limits<double>::infinity();
  out.bound = theorem_bound(cfg.rho, cfg.lx, cfg.lp, cfg.eps_gen, cfg.eps_f, cfg.e0);
  return out;
}

std::vector<KappaSweepRow> sweep_kappa(const OracleConfig& base, const std::vector<double>& kappas,
                                       Exec exec) {
  if (base.lp <= 0.0) throw std::invalid_argument("sweep_kappa: lp must be positive");
  if (base.rho >= 1.0) throw std::invalid_argument("sweep_kappa: rho must be below 1");
  std::vector<KappaSweepRow> rows;
  rows.reserve(kappas.size());
  const std::size_t tail = std::max<std::size_t>(1, base.horizon / 5);
  for (double kappa : kappas) {
    if (kappa < 0.0) throw std::invalid_argument("sweep_kappa: negative kappa");
    OracleConfig cfg = base;
    cfg.lx = kappa * (1.0 - cfg.rho) / cfg.lp;
    OracleSeries series = simulate(build_oracle(cfg), exec);
    KappaSweepRow row;
    row.kappa = kappa;
    row.lx = cfg.lx;
    double acc = 0.0;
    for (std::size_t t = cfg.horizon - tail; t < cfg.horizon; ++t) acc += series.delta_hat[t];
    row.plateau = acc / static_cast<double>(tail);
    row.bound = series.bound;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace lifecast
