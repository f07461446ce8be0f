#pragma once

#include <cstddef>
#include <vector>

#include "lifecast/nn.hpp"
#include "lifecast/parallel.hpp"

namespace lifecast {

// Observed gate activation ranges of a GRU over some set of visited states.
// All values must lie strictly inside (0, 1).
struct GateRanges {
  double z_min = 0.1;
  double z_max = 0.9;
  double r_max = 0.9;
};

void validate_gate_ranges(const GateRanges& g);

// Widens measured ranges by a safety factor (z_min shrinks, z_max / r_max
// grow, all clamped inside (0,1)).
GateRanges widen_gate_ranges(const GateRanges& g, double factor = 0.1);

// Closed-form bound on the state-to-state Jacobian norm of a GRU step, valid
// whenever gates stay inside `g` and |h|_inf <= 1.
double gru_rho_bound(const GruParams& p, const GateRanges& g);

// Closed-form bound on the input-to-state Jacobian norm.
double gru_lx_bound(const GruParams& p, const GateRanges& g);

// Error-loop amplification kappa = lp * lx / (1 - rho). Throws
// std::domain_error when rho >= 1 (no contraction margin).
double amplification(double rho, double lx, double lp);

struct SufficiencyCheck {
  bool pass = false;
  double margin = 0.0;  // (1 - rho_bar) - lp * lx_bar
};

SufficiencyCheck check_sufficient(double rho_bar, double lx_bar, double lp);

struct StateSample {
  Vec h, x;
};

struct EmpiricalMeasure {
  double rho_hat = 0.0;  // max over states of |d h' / d h|_2
  double lx_hat = 0.0;   // max over states of |d h' / d x|_2
  double h_inf = 0.0;    // largest |h| entry seen (bound validity check)
  GateRanges gates;
};

// Central finite-difference Jacobians at each visited state; probes are
// independent per state, so the parallel policy gives bitwise-equal results.
EmpiricalMeasure measure_empirical(const GruParams& p, const std::vector<StateSample>& states,
                                   double fd_step = 1e-5, Exec exec = Exec::Serial);

// Gate activation ranges alone (no Jacobian probes) — cheap enough to run as
// a periodic training hook.
GateRanges measure_gates(const GruParams& p, const std::vector<StateSample>& states);

struct EnforceOutcome {
  bool ok = false;
  int rounds = 0;  // shrink rounds applied; 0 means params already passed
  double rho_bar = 0.0;
  double lx_bar = 0.0;
  double kappa_bar = 0.0;
};

// Shrinks recurrent matrices first (until the state contraction bound leaves
// headroom), then input matrices, by a fixed factor per round, until
// check_sufficient passes with kappa_bar <= target. Norms never increase;
// params that already pass are returned untouched.
EnforceOutcome enforce(GruParams& p, double target_kappa, double lp, const GateRanges& g);

}  // namespace lifecast
