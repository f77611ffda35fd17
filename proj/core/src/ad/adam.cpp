#include "sdt/ad/adam.hpp"

#include <cmath>

#include "sdt/common/error.hpp"

namespace sdt::ad {

void Adam::step(ParameterStore& params) {
  for (const auto& [name, p] : params.items()) {
    if (!p.requires_grad()) continue;
    for (double g : p.grad()) {
      if (!std::isfinite(g)) throw NumericalError("non-finite gradient for parameter '" + name + "'");
    }
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (auto& [name, p] : params.items()) {
    if (!p.requires_grad()) continue;
    auto& mom = moments_[name];
    if (mom.m.size() != p.size()) {
      mom.m.assign(p.size(), 0.0);
      mom.v.assign(p.size(), 0.0);
    }
    auto& data = p.data();
    const auto& grad = p.grad();
    for (std::size_t i = 0; i < data.size(); ++i) {
      mom.m[i] = config_.beta1 * mom.m[i] + (1.0 - config_.beta1) * grad[i];
      mom.v[i] = config_.beta2 * mom.v[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
      const double m_hat = mom.m[i] / c1;
      const double v_hat = mom.v[i] / c2;
      data[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

}  // namespace sdt::ad
