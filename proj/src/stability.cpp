#include "lifecast/stability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lifecast/linalg.hpp"

namespace lifecast {

void validate_gate_ranges(const GateRanges& g) {
  if (!(g.z_min > 0.0 && g.z_min <= g.z_max && g.z_max < 1.0))
    throw std::invalid_argument("gate ranges: need 0 < z_min <= z_max < 1");
  if (!(g.r_max > 0.0 && g.r_max < 1.0))
    throw std::invalid_argument("gate ranges: need 0 < r_max < 1");
}

GateRanges widen_gate_ranges(const GateRanges& g, double factor) {
  GateRanges w;
  w.z_min = std::max(g.z_min * (1.0 - factor), 1e-4);
  w.z_max = std::min(g.z_max * (1.0 + factor), 1.0 - 1e-4);
  w.r_max = std::min(g.r_max * (1.0 + factor), 1.0 - 1e-4);
  return w;
}

double gru_rho_bound(const GruParams& p, const GateRanges& g) {
  validate_gate_ranges(g);
  double uz = spectral_norm(p.Uz);
  double ur = spectral_norm(p.Ur);
  double uh = spectral_norm(p.Uh);
  return (1.0 - g.z_min) + 0.5 * uz + g.z_max * uh * (g.r_max + 0.25 * ur);
}

double gru_lx_bound(const GruParams& p, const GateRanges& g) {
  validate_gate_ranges(g);
  double wz = spectral_norm(p.Wz);
  double wr = spectral_norm(p.Wr);
  double wh = spectral_norm(p.Wh);
  double uh = spectral_norm(p.Uh);
  return 0.5 * wz + g.z_max * (wh + 0.25 * uh * wr);
}

double amplification(double rho, double lx, double lp) {
  if (rho < 0.0 || lx < 0.0 || lp < 0.0)
    throw std::invalid_argument("amplification: constants must be nonnegative");
  if (rho >= 1.0) throw std::domain_error("amplification: contraction margin violated (rho >= 1)");
  return lp * lx / (1.0 - rho);
}

SufficiencyCheck check_sufficient(double rho_bar, double lx_bar, double lp) {
  SufficiencyCheck c;
  c.margin = (1.0 - rho_bar) - lp * lx_bar;
  c.pass = rho_bar < 1.0 && c.margin > 0.0;
  return c;
}

namespace {

double fd_jacobian_norm(const GruParams& p, const Vec& h, const Vec& x, double step,
                        bool wrt_state) {
  const std::size_t m = p.hidden();
  const std::size_t cols = wrt_state ? h.size() : x.size();
  Matrix J(m, cols);
  Vec hp = h, xp = x;
  for (std::size_t j = 0; j < cols; ++j) {
    double& slot = wrt_state ? hp[j] : xp[j];
    double orig = slot;
    slot = orig + step;
    Vec fplus = gru_step(p, hp, xp).h;
    slot = orig - step;
    Vec fminus = gru_step(p, hp, xp).h;
    slot = orig;
    for (std::size_t i = 0; i < m; ++i) J(i, j) = (fplus[i] - fminus[i]) / (2.0 * step);
  }
  return spectral_norm(J);
}

}  // namespace

EmpiricalMeasure measure_empirical(const GruParams& p, const std::vector<StateSample>& states,
                                   double fd_step, Exec exec) {
  if (states.empty()) throw std::invalid_argument("measure_empirical: no states");
  if (fd_step <= 0.0) throw std::invalid_argument("measure_empirical: bad fd step");

  struct PerState {
    double rho, lx, hinf, zmin, zmax, rmax;
  };
  std::vector<PerState> rows(states.size());

  parallel_for(exec, states.size(), [&](std::size_t i) {
    const StateSample& st = states[i];
    GruStep fwd = gru_step(p, st.h, st.x);
    PerState& r = rows[i];
    r.rho = fd_jacobian_norm(p, st.h, st.x, fd_step, true);
    r.lx = fd_jacobian_norm(p, st.h, st.x, fd_step, false);
    r.hinf = 0.0;
    for (double v : st.h) r.hinf = std::max(r.hinf, std::abs(v));
    r.zmin = 1.0;
    r.zmax = 0.0;
    r.rmax = 0.0;
    for (double z : fwd.cache.z) {
      r.zmin = std::min(r.zmin, z);
      r.zmax = std::max(r.zmax, z);
    }
    for (double rr : fwd.cache.r) r.rmax = std::max(r.rmax, rr);
  });

  EmpiricalMeasure out;
  out.gates.z_min = 1.0;
  out.gates.z_max = 0.0;
  out.gates.r_max = 0.0;
  for (const PerState& r : rows) {
    out.rho_hat = std::max(out.rho_hat, r.rho);
    out.lx_hat = std::max(out.lx_hat, r.lx);
    out.h_inf = std::max(out.h_inf, r.hinf);
    out.gates.z_min = std::min(out.gates.z_min, r.zmin);
    out.gates.z_max = std::max(out.gates.z_max, r.zmax);
    out.gates.r_max = std::max(out.gates.r_max, r.rmax);
  }
  return out;
}

GateRanges measure_gates(const GruParams& p, const std::vector<StateSample>& states) {
  if (states.empty()) throw std::invalid_argument("measure_gates: no states");
  GateRanges g;
  g.z_min = 1.0;
  g.z_max = 0.0;
  g.r_max = 0.0;
  for (const StateSample& st : states) {
    GruStep fwd = gru_step(p, st.h, st.x);
    for (double z : fwd.cache.z) {
      g.z_min = std::min(g.z_min, z);
      g.z_max = std::max(g.z_max, z);
    }
    for (double r : fwd.cache.r) g.r_max = std::max(g.r_max, r);
  }
  return g;
}

EnforceOutcome enforce(GruParams& p, double target_kappa, double lp, const GateRanges& g) {
  validate_gate_ranges(g);
  if (!(target_kappa > 0.0 && target_kappa < 1.0))
    throw std::invalid_argument("enforce: target kappa must lie in (0,1)");
  if (lp < 0.0) throw std::invalid_argument("enforce: negative lp");

  constexpr double kShrink = 0.9;
  constexpr int kMaxRounds = 400;
  // Recurrent shrinking cannot push rho_bar below 1 - z_min; stop once half
  // the achievable headroom is claimed and work on the input matrices.
  const double rho_goal = 1.0 - 0.5 * g.z_min;

  EnforceOutcome out;
  for (int round = 0; round <= kMaxRounds; ++round) {
    out.rho_bar = gru_rho_bound(p, g);
    out.lx_bar = gru_lx_bound(p, g);
    if (out.rho_bar < 1.0) {
      SufficiencyCheck c = check_sufficient(out.rho_bar, out.lx_bar, lp);
      out.kappa_bar = amplification(out.rho_bar, out.lx_bar, lp);
      if (c.pass && out.kappa_bar <= target_kappa) {
        out.ok = true;
        out.rounds = round;
        return out;
      }
    }
    if (round == kMaxRounds) break;
    double u_mass = spectral_norm(p.Uz) + spectral_norm(p.Ur) + spectral_norm(p.Uh);
    if (out.rho_bar > rho_goal && u_mass > 1e-12) {
      p.Uz.scale(kShrink);
      p.Ur.scale(kShrink);
      p.Uh.scale(kShrink);
    } else {
      p.Wz.scale(kShrink);
      p.Wr.scale(kShrink);
      p.Wh.scale(kShrink);
    }
  }
  out.ok = false;
  out.rounds = kMaxRounds;
  return out;
}

}  // namespace lifecast
