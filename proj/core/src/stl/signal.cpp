#include "sdt/stl/signal.hpp"

#include <algorithm>
#include <cmath>

#include "sdt/common/error.hpp"

namespace sdt::stl {

Signal::Signal(std::vector<std::string> schema, std::vector<double> values)
    : schema_(std::move(schema)), values_(std::move(values)) {
  if (schema_.empty()) throw DataError("signal schema is empty");
  if (values_.empty() || values_.size() % schema_.size() != 0) {
    throw DataError("signal has " + std::to_string(values_.size()) + " values for " +
                    std::to_string(schema_.size()) + " channels");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw DataError("signal value at step " + std::to_string(i / schema_.size() + 1) +
                      ", channel '" + schema_[i % schema_.size()] + "' is not finite");
    }
  }
}

Signal Signal::scalar(std::string channel, std::vector<double> values) {
  return Signal({std::move(channel)}, std::move(values));
}

std::optional<std::size_t> Signal::index_of(const std::string& channel) const {
  auto it = std::find(schema_.begin(), schema_.end(), channel);
  if (it == schema_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - schema_.begin());
}

Signal Signal::slice(std::size_t first, std::size_t last) const {
  if (first < 1 || last < first || last > length()) {
    throw DataError("slice [" + std::to_string(first) + "," + std::to_string(last) +
                    "] outside signal of length " + std::to_string(length()));
  }
  const std::size_t c = schema_.size();
  return Signal(schema_, std::vector<double>(values_.begin() + (first - 1) * c,
                                             values_.begin() + last * c));
}

}  // namespace sdt::stl
