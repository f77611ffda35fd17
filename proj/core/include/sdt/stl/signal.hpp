#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sdt::stl {

/// Discrete-time multichannel signal. Steps are 1-indexed in every public
/// accessor; values are stored row-major (one row per step).
class Signal {
 public:
  Signal() = default;
  // Throws DataError unless values.size() is a positive multiple of the
  // schema size and every value is finite.
  Signal(std::vector<std::string> schema, std::vector<double> values);

  // Convenience for single-channel signals.
  static Signal scalar(std::string channel, std::vector<double> values);

  std::size_t length() const { return schema_.empty() ? 0 : values_.size() / schema_.size(); }
  std::size_t channels() const { return schema_.size(); }
  const std::vector<std::string>& schema() const { return schema_; }
  const std::vector<double>& values() const { return values_; }

  std::span<const double> step(std::size_t t) const {
    return {values_.data() + (t - 1) * schema_.size(), schema_.size()};
  }
  double at(std::size_t t, std::size_t channel) const {
    return values_[(t - 1) * schema_.size() + channel];
  }
  std::optional<std::size_t> index_of(const std::string& channel) const;

  /// Steps first..last inclusive (1-indexed) as a new signal.
  Signal slice(std::size_t first, std::size_t last) const;

 private:
  std::vector<std::string> schema_;
  std::vector<double> values_;
};

}  // namespace sdt::stl
