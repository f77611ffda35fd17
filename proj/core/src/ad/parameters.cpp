#include "sdt/ad/parameters.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace sdt::ad {

using nlohmann::json;

Array& ParameterStore::add(const std::string& name, Array value) {
  auto [it, inserted] = params_.emplace(name, std::move(value));
  if (!inserted) throw ShapeError("duplicate parameter '" + name + "'");
  return it->second;
}

Array& ParameterStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw DataError("missing parameter '" + name + "'");
  return it->second;
}

const Array& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw DataError("missing parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterStore::count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

Array normal_array(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, stddev);
  std::vector<double> data(numel(shape));
  for (auto& v : data) v = gauss(rng);
  return Array(std::move(shape), std::move(data), true);
}

void save_parameters(const ParameterStore& params, std::ostream& out) {
  json j = json::object();
  for (const auto& [name, p] : params.items()) j[name] = {{"shape", p.shape()}, {"values", p.data()}};
  out << j.dump() << '\n';
}

void save_parameters(const ParameterStore& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  save_parameters(params, out);
}

ParameterStore load_parameters(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("parameter file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("parameter file must hold a JSON object");
  ParameterStore store;
  for (const auto& [name, entry] : j.items()) {
    try {
      store.add(name, Array(entry.at("shape").get<Shape>(), entry.at("values").get<std::vector<double>>(), true));
    } catch (const json::exception& e) {
      throw DataError("parameter '" + name + "': " + e.what());
    } catch (const ShapeError& e) {
      throw DataError("parameter '" + name + "': " + e.what());
    }
  }
  return store;
}

ParameterStore load_parameters(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return load_parameters(in);
}

}  // namespace sdt::ad
