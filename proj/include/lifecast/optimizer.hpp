#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "lifecast/model.hpp"

namespace lifecast {

// Adam with bias correction, one moment pair per parameter group.
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ModelParameters& params, const ModelParameters& grad);

  std::size_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Moments {
    Vec m, v;
  };
  AdamConfig cfg_;
  std::map<std::string, Moments> state_;
  std::size_t t_ = 0;
};

}  // namespace lifecast
