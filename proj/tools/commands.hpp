#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace sdt::cli {

struct MonitorOptions {
  std::string spec;
  std::string signals;
  std::optional<std::size_t> at;
  bool prefix = false;
  bool suffix = false;
  bool trace = false;
};

struct GenDataOptions {
  std::string env = "run";
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::size_t horizon = 60;
  std::string out;
};

struct RelabelOptions {
  std::string in;
  std::string env_kind;
  std::string spec;  // defaults to the built-in spec of env_kind
  std::string rule = "formula-exact";
  std::string out;
};

struct AnnotateOptions {
  std::string in;
  std::string spec;  // defaults to the dataset header
  std::string out;
};

struct TrainOptions {
  std::string data;
  std::string config;  // JSON file or inline JSON object
  std::string out;
  std::string log;     // defaults to <out>.loss.csv
  std::string ablate;  // "", no-prefix, no-suffix, reward-prefix
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
};

struct EvalOptions {
  std::string ckpt;
  std::string env;   // defaults to the checkpoint's env
  std::string spec;  // defaults to the checkpoint's spec
  std::optional<double> target_reward;
  std::string suffix;
  std::size_t episodes = 20;
  std::uint64_t seed = 0;
  std::string mode = "mean";
  std::string out;
};

struct SweepOptions {
  std::string ckpt;
  std::string grid;  // JSON file or inline JSON
  std::string env;
  std::string spec;
  std::size_t episodes = 20;
  std::uint64_t seed = 0;
  std::string mode = "mean";
  std::string out;
};

struct ScaleOptions {
  std::string spec;
  std::string label;
  double alpha = 1.0;
};

// Each command prints its effective command line to `log` before acting and
// writes results to `out` unless an output path is given.
void run_monitor(MonitorOptions o, std::ostream& out, std::ostream& log);
void run_gen_data(GenDataOptions o, std::ostream& out, std::ostream& log);
void run_relabel(RelabelOptions o, std::ostream& out, std::ostream& log);
void run_annotate(AnnotateOptions o, std::ostream& out, std::ostream& log);
void run_train(TrainOptions o, std::ostream& out, std::ostream& log);
void run_eval(EvalOptions o, std::ostream& out, std::ostream& log);
void run_sweep(SweepOptions o, std::ostream& out, std::ostream& log);
void run_scale(ScaleOptions o, std::ostream& out, std::ostream& log);

}  // namespace sdt::cli
