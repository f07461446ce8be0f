#include "lifecast/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace lifecast {

void Adam::step(ModelParameters& params, const ModelParameters& grad) {
  ++t_;
  double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

  std::map<std::string, const Vec*> gmap;
  for_each_param(grad, [&](const std::string& name, const Vec& g) { gmap[name] = &g; });

  for_each_param(params, [&](const std::string& name, Vec& w) {
    auto it = gmap.find(name);
    if (it == gmap.end()) throw std::invalid_argument("Adam: missing gradient for " + name);
    const Vec& g = *it->second;
    if (g.size() != w.size()) throw std::invalid_argument("Adam: size mismatch for " + name);
    Moments& mo = state_[name];
    if (mo.m.empty()) {
      mo.m.assign(w.size(), 0.0);
      mo.v.assign(w.size(), 0.0);
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      mo.m[i] = cfg_.beta1 * mo.m[i] + (1.0 - cfg_.beta1) * g[i];
      mo.v[i] = cfg_.beta2 * mo.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      double mhat = mo.m[i] / c1;
      double vhat = mo.v[i] / c2;
      w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  });
}

}  // namespace lifecast
