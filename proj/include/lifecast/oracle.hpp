#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lifecast/linalg.hpp"
#include "lifecast/parallel.hpp"

namespace lifecast {

// Linear-Gaussian twin-system simulator with directly controlled constants.
// Ground truth:  h*_t = rho R h*_{t-1} + lx B x_t,   x_t ~ N(C h*_{t-1}, I)
// Approximation: ^h_t = rho R ^h_{t-1} + lx B ^x_t + drift,
//                ^x_t ~ N(C ^h_{t-1} + mismatch, I)
// where |R|_2 = |B|_2 = 1, |C|_2 = lp, |mismatch| = eps_gen, |drift| = eps_f.
//
// Construction: B has orthonormal columns, C = lp B^T, and R acts as the
// identity on col(B) and as a seeded rotation on its complement. The
// closed-loop matrix rho R + lx B C then has spectral radius exactly
// rho + lx lp, so the amplification factor is the exact stability boundary:
// kappa < 1 converges, kappa > 1 diverges.
struct OracleConfig {
  std::size_t latent_dim = 8;
  std::size_t obs_dim = 4;
  double rho = 0.5;
  double lx = 0.4;
  double lp = 1.0;
  double eps_gen = 0.1;  // observation-mean mismatch
  double eps_f = 0.0;    // latent drift
  double e0 = 0.0;       // initial latent error
  std::size_t horizon = 60;
  std::size_t rollouts = 10000;
  std::uint64_t seed = 1;
  // Shared observation-noise draws between the two systems. This realizes
  // the coupling under which the error recursion is stated; with independent
  // draws the measured gap includes coupling noise unrelated to the bound.
  bool common_noise = true;
  std::size_t pulse_time = 0;  // 0 disables
  double pulse_mag = 0.0;
};

struct OracleSystem {
  OracleConfig cfg;
  Matrix R, B, C;
  Vec mismatch_dir, drift_dir, init_err_dir, pulse_dir;  // unit vectors
};

OracleSystem build_oracle(const OracleConfig& cfg);

struct OracleSeries {
  // Index t-1 holds the step-t value, t = 1..horizon.
  Vec delta_hat;  // mean one-step distribution gap |C(^h - h*) + mismatch|
  Vec e_hat;      // mean latent gap |^h - h*|
  Vec obs_gap;    // mean |^x - x|
  double bound = 0.0;
  double kappa = 0.0;
};

// Uniform forecast-error bound implied by the constants; +inf when kappa >= 1.
double theorem_bound(double rho, double lx, double lp, double eps_gen, double eps_f, double e0);

// Per-rollout RNG substreams and an index-ordered reduction make the two
// execution policies bitwise identical.
OracleSeries simulate(const OracleSystem& sys, Exec exec = Exec::Serial);

struct KappaSweepRow {
  double kappa = 0.0;
  double lx = 0.0;
  double plateau = 0.0;  // mean delta_hat over the final fifth of the horizon
  double bound = 0.0;
};

// Re-runs the simulation with lx adjusted to hit each requested kappa
// (rho and lp fixed).
std::vector<KappaSweepRow> sweep_kappa(const OracleConfig& base, const std::vector<double>& kappas,
                                       Exec exec = Exec::Serial);

}  // namespace lifecast
