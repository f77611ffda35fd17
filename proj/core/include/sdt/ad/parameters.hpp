#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <string>

#include "sdt/ad/array.hpp"

namespace sdt::ad {

/// Named trainable arrays, iterated in name order.
class ParameterStore {
 public:
  Array& add(const std::string& name, Array value);
  Array& at(const std::string& name);
  const Array& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::map<std::string, Array>& items() { return params_; }
  const std::map<std::string, Array>& items() const { return params_; }
  std::size_t count() const;  // total number of scalars

  void zero_grad();

  friend bool operator==(const ParameterStore& a, const ParameterStore& b) {
    return a.params_ == b.params_;
  }

 private:
  std::map<std::string, Array> params_;
};

/// Normal(0, std) entries from `rng`, requiring a gradient.
Array normal_array(Shape shape, double stddev, std::mt19937_64& rng);

/// JSON object name -> {"shape": [...], "values": [...]}, doubles in shortest
/// round-trip form.
void save_parameters(const ParameterStore& params, std::ostream& out);
void save_parameters(const ParameterStore& params, const std::string& path);
ParameterStore load_parameters(std::istream& in);
ParameterStore load_parameters(const std::string& path);

}  // namespace sdt::ad
