// Benchmark of the parallel kernels against their serial reference: oracle
// rollouts, forecast sampling, and finite-difference Jacobian probes. The two
// policies must agree bitwise; this tool reports timings and verifies that.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "lifecast/diffusion.hpp"
#include "lifecast/oracle.hpp"
#include "lifecast/parallel.hpp"
#include "lifecast/protocol.hpp"
#include "lifecast/stability.hpp"

namespace {

using namespace lifecast;

double time_ms(const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto end = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(end - start).count();
}

void report(const std::string& name, double serial_ms, double parallel_ms, bool equal) {
  std::printf("%-24s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   %s\n", name.c_str(),
              serial_ms, parallel_ms, serial_ms / parallel_ms,
              equal ? "results identical" : "RESULTS DIFFER");
}

}  // namespace

int main() {
  std::printf("OpenMP %s, max threads %d\n\n", openmp_enabled() ? "enabled" : "disabled",
              max_threads());

  {
    OracleConfig cfg;
    cfg.rollouts = 4000;
    OracleSystem sys = build_oracle(cfg);
    OracleSeries serial_out, parallel_out;
    const double ts = time_ms([&] { serial_out = simulate(sys, Exec::Serial); });
    const double tp = time_ms([&] { parallel_out = simulate(sys, Exec::Parallel); });
    report("oracle simulate", ts, tp,
           serial_out.delta_hat == parallel_out.delta_hat &&
               serial_out.e_hat == parallel_out.e_hat);
  }

  {
    ModelShape shape;
    shape.desc_dim = 6;
    ModelParameters params = model_init(shape, 0.5, 7);
    NoiseSchedule sched = NoiseSchedule::linear(50, 1e-4, 0.1);
    ContextInput in;
    RngStream rng(11);
    for (int k = 0; k < 5; ++k) {
      Matrix ref(16, 1);
      for (std::size_t t = 0; t < 16; ++t) ref(t, 0) = rng.gaussian();
      in.refs.push_back(std::move(ref));
    }
    in.weights = similarity_weights(Vec{0.1, 0.4, 0.9, 1.6, 2.5}, 1.0);
    in.descriptor.resize(shape.desc_dim);
    for (double& v : in.descriptor) v = rng.gaussian();
    ContextState ctx = build_context(params, in);
    std::vector<Vec> prefix{{0.1}, {0.3}, {0.5}};

    RolloutResult serial_out, parallel_out;
    const RngStream roll_rng(123);
    const double ts = time_ms([&] {
      serial_out = rollout(params, sched, ctx, prefix, 16, 200, roll_rng, 5.0, Exec::Serial);
    });
    const double tp = time_ms([&] {
      parallel_out = rollout(params, sched, ctx, prefix, 16, 200, roll_rng, 5.0, Exec::Parallel);
    });
    bool equal = serial_out.paths.size() == parallel_out.paths.size();
    for (std::size_t r = 0; equal && r < serial_out.paths.size(); ++r)
      equal = serial_out.paths[r] == parallel_out.paths[r];
    report("forecast rollout", ts, tp, equal);

    std::vector<StateSample> states;
    RngStream srng(29);
    for (int i = 0; i < 128; ++i) {
      StateSample st;
      st.h.resize(shape.hidden_dim);
      st.x.resize(shape.trans_input_dim());
      for (double& v : st.h) v = 0.5 * srng.gaussian();
      for (double& v : st.x) v = srng.gaussian();
      states.push_back(std::move(st));
    }
    EmpiricalMeasure ms, mp;
    const double js = time_ms([&] { ms = measure_empirical(params.trans, states, 1e-5, Exec::Serial); });
    const double jp = time_ms([&] { mp = measure_empirical(params.trans, states, 1e-5, Exec::Parallel); });
    report("jacobian probes", js, jp, ms.rho_hat == mp.rho_hat && ms.lx_hat == mp.lx_hat);
  }

  return 0;
}
