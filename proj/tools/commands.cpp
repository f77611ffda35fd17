#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <type_traits>
#include <vector>

#include "sdt/common/env_kind.hpp"
#include "sdt/common/error.hpp"
#include "sdt/data/dataset.hpp"
#include "sdt/data/relabel.hpp"
#include "sdt/env/behavior.hpp"
#include "sdt/env/point_mass.hpp"
#include "sdt/eval/rollout.hpp"
#include "sdt/policy/policy.hpp"
#include "sdt/stl/parser.hpp"
#include "sdt/stl/robustness.hpp"
#include "sdt/stl/specs.hpp"
#include "sdt/train/trainer.hpp"

namespace sdt::cli {

using nlohmann::json;

namespace {

std::string quote(const std::string& arg) {
  const bool plain = !arg.empty() && arg.find_first_not_of(
                                         "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
                                         "-_./:=+,@") == std::string::npos;
  if (plain) return arg;
  std::string out = "'";
  for (char c : arg) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

class CommandLine {
 public:
  explicit CommandLine(const std::string& command) : text_("sdt " + command) {}

  CommandLine& flag(const std::string& name, const std::string& value) {
    text_ += " --" + name + " " + quote(value);
    return *this;
  }
  template <typename T>
    requires std::is_arithmetic_v<T>
  CommandLine& flag(const std::string& name, T value) {
    return flag(name, json(value).dump());
  }
  CommandLine& toggle(const std::string& name, bool on) {
    if (on) text_ += " --" + name;
    return *this;
  }

  void print(std::ostream& log) const { log << "# effective: " << text_ << std::endl; }

 private:
  std::string text_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

// Built-in name, path to a formula file, or inline formula text.
std::string spec_text(const std::string& spec) {
  if (spec == "run" || spec == "circle" || spec == "reach") {
    return stl::to_string(env::builtin_spec(env::default_config(parse_env_kind(spec))));
  }
  std::error_code ec;
  if (std::filesystem::is_regular_file(spec, ec)) return trim(read_file(spec));
  return spec;
}

// Inline JSON when the text starts with '{' or '[', otherwise a file path.
json json_argument(const std::string& text, const std::string& what) {
  const std::string body = trim(text);
  const std::string source = !body.empty() && (body[0] == '{' || body[0] == '[') ? body : read_file(text);
  try {
    return json::parse(source);
  } catch (const json::parse_error& e) {
    throw UsageError(what + " is not valid JSON: " + e.what());
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

data::RelabelRule parse_rule(const std::string& rule) {
  if (rule == "formula-exact") return data::RelabelRule::kFormulaExact;
  if (rule == "published") return data::RelabelRule::kPublished;
  throw UsageError("unknown relabel rule '" + rule + "' (expected formula-exact|published)");
}

eval::ActionMode parse_mode(const std::string& mode) {
  if (mode == "mean") return eval::ActionMode::kMean;
  if (mode == "sample") return eval::ActionMode::kSample;
  throw UsageError("unknown action mode '" + mode + "' (expected mean|sample)");
}

void write_values(std::ostream& out, const char* key, const std::vector<double>& values,
                  std::optional<std::size_t> at, const std::string& id) {
  json line;
  if (!id.empty()) line["trajectory"] = id;
  if (at) {
    if (*at < 1 || *at > values.size()) {
      throw UsageError("--at " + std::to_string(*at) + " is outside [1, " + std::to_string(values.size()) + "]");
    }
    line["t"] = *at;
    line[key] = values[*at - 1];
  } else {
    line[key] = values;
  }
  out << line.dump() << '\n';
}

struct LoadedCheckpoint {
  policy::Policy policy;
  policy::CheckpointMeta meta;
  std::optional<data::DatasetStats> stats;
};

LoadedCheckpoint load(const std::string& path) {
  policy::CheckpointMeta meta;
  auto p = policy::load_checkpoint(path, &meta);
  LoadedCheckpoint out{std::move(p), meta, std::nullopt};
  if (!meta.extra.empty()) {
    const json extra = json::parse(meta.extra, nullptr, false);
    if (extra.is_object() && extra.contains("stats")) {
      out.stats = data::dataset_stats_from_json(extra.at("stats").dump());
    }
  }
  return out;
}

// Training-data stats apply only to the env and spec they were computed for.
const data::DatasetStats* matching_stats(const LoadedCheckpoint& ckpt, const std::string& env,
                                         const std::string& spec) {
  if (!ckpt.stats || env != ckpt.meta.env || ckpt.meta.spec.empty()) return nullptr;
  const bool same_spec =
      stl::to_string(stl::parse_formula(spec)) == stl::to_string(stl::parse_formula(ckpt.meta.spec));
  return same_spec ? &*ckpt.stats : nullptr;
}

env::EnvConfig eval_env(const std::string& name, const policy::Policy& p) {
  auto config = env::default_config(parse_env_kind(name));
  config.horizon = std::min(config.horizon, p.config().max_timestep);
  return config;
}

}  // namespace

void run_monitor(MonitorOptions o, std::ostream& out, std::ostream& log) {
  if (static_cast<int>(o.prefix) + static_cast<int>(o.suffix) + static_cast<int>(o.trace) > 1) {
    throw UsageError("choose at most one of --prefix, --suffix, --trace");
  }
  const std::string text = spec_text(o.spec);
  CommandLine cmd("monitor");
  cmd.flag("spec", text).flag("signals", o.signals);
  if (o.at) cmd.flag("at", *o.at);
  cmd.toggle("prefix", o.prefix).toggle("suffix", o.suffix).toggle("trace", o.trace).print(log);

  const auto formula = stl::parse_formula(text);
  // Either per-step objects {"channel": value} or trajectory records.
  std::ifstream in(o.signals);
  if (!in) throw DataError("cannot open '" + o.signals + "'");
  std::vector<std::string> schema;
  std::vector<double> values;
  std::vector<std::pair<std::string, stl::Signal>> signals;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("signals line " + std::to_string(number) + ": " + e.what());
    }
    if (!j.is_object()) throw DataError("signals line " + std::to_string(number) + ": expected an object");
    if (j.contains("states")) {
      std::istringstream one(line);
      const auto d = data::load_dataset(one);
      for (const auto& t : d.trajectories) signals.emplace_back(std::to_string(number), t.signal());
      continue;
    }
    if (j.contains("env") && j.contains("spec")) continue;  // dataset header
    std::vector<std::string> keys;
    for (const auto& [key, value] : j.items()) {
      if (!value.is_number()) {
        throw DataError("signals line " + std::to_string(number) + ": channel '" + key + "' is not a number");
      }
      keys.push_back(key);
      values.push_back(value.get<double>());
    }
    if (schema.empty()) schema = keys;
    if (keys != schema) throw DataError("signals line " + std::to_string(number) + ": channels differ from line 1");
  }
  if (!schema.empty()) signals.emplace_back("", stl::Signal(schema, values));
  if (signals.empty()) throw DataError("no signal steps in '" + o.signals + "'");

  for (const auto& [id, signal] : signals) {
    stl::validate(formula, signal.schema());
    const std::size_t length = signal.length();
    if (o.trace) {
      write_values(out, "trace", stl::robustness_trace(signal, formula).values, o.at, id);
    } else if (o.prefix || o.suffix) {
      std::vector<double> v;
      for (std::size_t t = 1; t <= length; ++t) {
        v.push_back(o.prefix ? stl::prefix_robustness(signal, t, formula) : stl::suffix_robustness(signal, t, formula));
      }
      write_values(out, o.prefix ? "prefix" : "suffix", v, o.at, id);
    } else {
      const std::size_t t = o.at.value_or(1);
      if (t < 1 || t > length) {
        throw UsageError("--at " + std::to_string(t) + " is outside [1, " + std::to_string(length) + "]");
      }
      const double rho = stl::robustness(signal, t, formula);
      json j{{"t", t}, {"rho", rho}, {"satisfied", stl::satisfied(rho)}};
      if (!id.empty()) j["trajectory"] = id;
      out << j.dump() << '\n';
    }
  }
}

void run_gen_data(GenDataOptions o, std::ostream& out, std::ostream& log) {
  CommandLine("gen-data")
      .flag("env", o.env)
      .flag("n", o.n)
      .flag("seed", o.seed)
      .flag("horizon", o.horizon)
      .flag("out", o.out)
      .print(log);
  auto config = env::default_config(parse_env_kind(o.env));
  config.horizon = o.horizon;
  config.seed = o.seed;
  const auto dataset = env::generate_dataset(config, o.n, env::default_mix(config.kind), o.seed);
  data::save_dataset(dataset, o.out);
  const auto stats = data::compute_stats(dataset, env::builtin_spec(config));
  out << json{{"trajectories", stats.trajectories},
              {"safe", stats.safe_trajectories},
              {"satisfaction_fraction", stats.satisfaction_fraction}}
             .dump()
      << '\n';
}

void run_relabel(RelabelOptions o, std::ostream& out, std::ostream& log) {
  const auto kind = parse_env_kind(o.env_kind);
  const std::string text = spec_text(o.spec.empty() ? o.env_kind : o.spec);
  parse_rule(o.rule);
  CommandLine("relabel")
      .flag("in", o.in)
      .flag("env-kind", o.env_kind)
      .flag("spec", text)
      .flag("rule", o.rule)
      .flag("out", o.out)
      .print(log);
  auto dataset = data::load_dataset(o.in);
  const auto audit = data::relabel_dataset(dataset, kind, stl::parse_formula(text), parse_rule(o.rule));
  data::save_dataset(dataset, o.out);
  out << json{{"checked", audit.checked}, {"mismatches", audit.mismatches}, {"skipped", audit.skipped}}.dump()
      << '\n';
}

void run_annotate(AnnotateOptions o, std::ostream& out, std::ostream& log) {
  auto dataset = data::load_dataset(o.in);
  if (o.spec.empty() && dataset.spec.empty()) throw UsageError("--spec is required: the dataset header has no spec");
  const std::string text = o.spec.empty() ? dataset.spec : spec_text(o.spec);
  CommandLine("annotate").flag("in", o.in).flag("spec", text).flag("out", o.out).print(log);
  const auto formula = stl::parse_formula(text);
  data::annotate_dataset(dataset, formula);
  dataset.spec = stl::to_string(formula);
  data::save_dataset(dataset, o.out);
  const auto stats = data::compute_stats(dataset, formula);
  out << json{{"trajectories", stats.trajectories}, {"safe", stats.safe_trajectories}}.dump() << '\n';
}

void run_train(TrainOptions o, std::ostream& out, std::ostream& log) {
  train::TrainConfig config;
  if (!o.config.empty()) config = train::train_config_from_json(json_argument(o.config, "--config").dump());
  if (o.seed) config.seed = *o.seed;
  if (o.steps) config.steps = *o.steps;
  if (o.ablate == "no-prefix") {
    config.policy.layout.prefix = false;
  } else if (o.ablate == "no-suffix") {
    config.policy.layout.suffix = false;
  } else if (o.ablate == "reward-prefix") {
    config.policy.layout.reward_prefix = true;
  } else if (!o.ablate.empty()) {
    throw UsageError("unknown ablation '" + o.ablate + "' (expected no-prefix|no-suffix|reward-prefix)");
  }
  config.validate();
  if (o.log.empty()) o.log = o.out + ".loss.csv";
  CommandLine("train")
      .flag("data", o.data)
      .flag("config", train::to_json(config))
      .flag("out", o.out)
      .flag("log", o.log)
      .print(log);

  const auto dataset = data::load_dataset(o.data);
  if (dataset.empty()) throw DataError("dataset '" + o.data + "' has no trajectories");
  if (dataset.spec.empty()) throw DataError("dataset '" + o.data + "' has no spec header (run annotate)");
  const auto formula = stl::parse_formula(dataset.spec);
  auto loss_log = open_output(o.log);
  auto result = train::train(dataset, config, &loss_log);
  const auto stats = data::compute_stats(dataset, formula);
  json extra{{"train", json::parse(train::to_json(config))}, {"stats", json::parse(data::to_json(stats))}};
  policy::save_checkpoint(result.policy, {dataset.env, dataset.spec, extra.dump()}, o.out);
  const auto& last = result.history.back();
  out << json{{"steps", last.step}, {"loss", last.loss}, {"nll", last.nll}, {"checkpoint", o.out}}.dump() << '\n';
}

void run_eval(EvalOptions o, std::ostream& out, std::ostream& log) {
  auto ckpt = load(o.ckpt);
  if (o.env.empty()) o.env = ckpt.meta.env;
  if (o.env.empty()) throw UsageError("--env is required: the checkpoint records no environment");
  const std::string text = o.spec.empty() ? ckpt.meta.spec : spec_text(o.spec);
  if (text.empty()) throw UsageError("--spec is required: the checkpoint records no spec");
  const data::DatasetStats* stats = matching_stats(ckpt, o.env, text);
  if (!o.target_reward || o.suffix.empty()) {
    if (!stats || stats->safe_returns.empty()) {
      throw UsageError("--target-reward and --suffix are required: no safe-data stats for this env and spec");
    }
    const auto [reward, suffix] = eval::default_targets(*stats);
    if (!o.target_reward) o.target_reward = reward;
    if (o.suffix.empty()) o.suffix = eval::to_string(eval::SuffixSchedule{eval::ScheduleKind::kFixed, suffix});
  }
  eval::EvalConfig config;
  config.target_reward = *o.target_reward;
  config.schedule = eval::parse_schedule(o.suffix);
  config.episodes = o.episodes;
  config.seed = o.seed;
  config.mode = parse_mode(o.mode);
  CommandLine cmd("eval");
  cmd.flag("ckpt", o.ckpt)
      .flag("env", o.env)
      .flag("spec", text)
      .flag("target-reward", *o.target_reward)
      .flag("suffix", eval::to_string(config.schedule))
      .flag("episodes", o.episodes)
      .flag("seed", o.seed)
      .flag("mode", o.mode);
  if (!o.out.empty()) cmd.flag("out", o.out);
  cmd.print(log);

  const auto env_config = eval_env(o.env, ckpt.policy);
  const auto report = eval::evaluate(ckpt.policy, env_config, stl::parse_formula(text), config, stats);
  if (o.out.empty()) {
    out << eval::to_json(report) << '\n';
  } else {
    open_output(o.out) << eval::to_json(report) << '\n';
  }
}

void run_sweep(SweepOptions o, std::ostream& out, std::ostream& log) {
  auto ckpt = load(o.ckpt);
  if (o.env.empty()) o.env = ckpt.meta.env;
  if (o.env.empty()) throw UsageError("--env is required: the checkpoint records no environment");
  const std::string text = o.spec.empty() ? ckpt.meta.spec : spec_text(o.spec);
  if (text.empty()) throw UsageError("--spec is required: the checkpoint records no spec");

  // {"target_reward": [...], "target_suffix": [...]} (cross product) or [[R, s], ...].
  const json grid_json = json_argument(o.grid, "--grid");
  std::vector<std::pair<double, double>> grid;
  try {
    if (grid_json.is_array()) {
      for (const auto& cell : grid_json) grid.emplace_back(cell.at(0).get<double>(), cell.at(1).get<double>());
    } else {
      std::vector<double> rewards;
      if (grid_json.contains("target_reward")) {
        rewards = grid_json.at("target_reward").get<std::vector<double>>();
      } else if (const auto* stats = matching_stats(ckpt, o.env, text); stats && !stats->safe_returns.empty()) {
        rewards = {eval::default_targets(*stats).first};
      } else {
        throw UsageError("--grid needs target_reward: the checkpoint has no safe-data stats");
      }
      for (double r : rewards) {
        for (double s : grid_json.at("target_suffix").get<std::vector<double>>()) grid.emplace_back(r, s);
      }
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("--grid has the wrong shape: ") + e.what());
  }
  json resolved = json::array();
  for (const auto& [r, s] : grid) resolved.push_back({r, s});
  CommandLine cmd("sweep");
  cmd.flag("ckpt", o.ckpt)
      .flag("grid", resolved.dump())
      .flag("env", o.env)
      .flag("spec", text)
      .flag("episodes", o.episodes)
      .flag("seed", o.seed)
      .flag("mode", o.mode);
  if (!o.out.empty()) cmd.flag("out", o.out);
  cmd.print(log);

  const auto rows = eval::alignment_sweep(ckpt.policy, eval_env(o.env, ckpt.policy), stl::parse_formula(text),
                                          grid, o.episodes, o.seed, parse_mode(o.mode));
  if (o.out.empty()) {
    eval::write_sweep_csv(rows, out);
  } else {
    auto file = open_output(o.out);
    eval::write_sweep_csv(rows, file);
  }
}

void run_scale(ScaleOptions o, std::ostream& out, std::ostream& log) {
  const std::string text = spec_text(o.spec);
  CommandLine("scale").flag("spec", text).flag("label", o.label).flag("alpha", o.alpha).print(log);
  out << stl::to_string(stl::scale_predicate(stl::parse_formula(text), {o.label}, o.alpha)) << '\n';
}

}  // namespace sdt::cli
