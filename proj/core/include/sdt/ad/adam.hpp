#pragma once

#include <map>
#include <string>
#include <vector>

#include "sdt/ad/parameters.hpp"

namespace sdt::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected adaptive-moment optimizer over a ParameterStore.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// One update from the accumulated gradients. Throws NumericalError naming
  /// the parameter when a gradient is not finite; no parameter changes then.
  void step(ParameterStore& params);

  std::size_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };

  AdamConfig config_;
  std::size_t steps_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace sdt::ad
