#include <CLI11.hpp>
#include <iostream>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "sdt/common/error.hpp"

namespace {

int report(const std::string& code, int exit_code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", code}, {"code", exit_code}, {"message", message}}.dump() << std::endl;
  return exit_code;
}

void add_train_flags(CLI::App* cmd, sdt::cli::TrainOptions& o) {
  cmd->add_option("--data", o.data, "Annotated dataset (JSON Lines)")->required();
  cmd->add_option("--config", o.config, "Training config: JSON file or inline object");
  cmd->add_option("--out", o.out, "Checkpoint path")->required();
  cmd->add_option("--log", o.log, "Loss CSV (default <out>.loss.csv)");
  cmd->add_option("--seed", o.seed, "Override the config seed");
  cmd->add_option("--steps", o.steps, "Override the config step count");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace sdt::cli;
  CLI::App app{"Offline safe RL with temporal-logic-conditioned transformers"};
  app.require_subcommand(1);

  MonitorOptions monitor;
  auto* m = app.add_subcommand("monitor", "STL robustness of recorded signals");
  m->add_option("--spec", monitor.spec, "Formula file, built-in name or inline formula")->required();
  m->add_option("--signals", monitor.signals, "JSON Lines: per-step objects or trajectories")->required();
  m->add_option("--at", monitor.at, "1-indexed step");
  m->add_flag("--prefix", monitor.prefix, "Prefix robustness rho(s[1:t], 1)");
  m->add_flag("--suffix", monitor.suffix, "Suffix robustness rho(s[t:T], 1)");
  m->add_flag("--trace", monitor.trace, "rho(s, t) for every t");

  GenDataOptions gen;
  auto* g = app.add_subcommand("gen-data", "Generate an offline dataset with scripted behavior policies");
  g->add_option("--env", gen.env, "run|circle|reach")->capture_default_str();
  g->add_option("--n", gen.n, "Number of trajectories")->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--horizon", gen.horizon)->capture_default_str();
  g->add_option("--out", gen.out)->required();

  RelabelOptions relabel;
  auto* r = app.add_subcommand("relabel", "Relabel costs and audit them against the spec");
  r->add_option("--in", relabel.in)->required();
  r->add_option("--env-kind", relabel.env_kind, "run|circle|reach")->required();
  r->add_option("--spec", relabel.spec, "Defaults to the built-in spec of --env-kind");
  r->add_option("--rule", relabel.rule, "formula-exact|published")->capture_default_str();
  r->add_option("--out", relabel.out)->required();

  AnnotateOptions annotate;
  auto* a = app.add_subcommand("annotate", "Add prefix/suffix robustness and return-to-go");
  a->add_option("--in", annotate.in)->required();
  a->add_option("--spec", annotate.spec, "Defaults to the dataset header");
  a->add_option("--out", annotate.out)->required();

  TrainOptions train;
  auto* t = app.add_subcommand("train", "Train a policy");
  add_train_flags(t, train);
  t->add_option("--ablate", train.ablate, "no-prefix|no-suffix|reward-prefix");

  TrainOptions ablate;
  auto* ab = app.add_subcommand("ablate", "Train with one conditioning token changed");
  add_train_flags(ab, ablate);
  ab->add_option("--mode", ablate.ablate, "no-prefix|no-suffix|reward-prefix")->required();

  EvalOptions eval;
  auto* e = app.add_subcommand("eval", "Roll out a checkpoint");
  e->add_option("--ckpt", eval.ckpt)->required();
  e->add_option("--env", eval.env, "Defaults to the checkpoint's env");
  e->add_option("--spec", eval.spec, "Defaults to the checkpoint's spec");
  e->add_option("--target-reward", eval.target_reward, "Defaults to the 90th percentile of safe returns");
  e->add_option("--suffix", eval.suffix, "fixed:v|linear:v|mean|max (default fixed:<median safe rho>)");
  e->add_option("--episodes", eval.episodes)->capture_default_str();
  e->add_option("--seed", eval.seed)->capture_default_str();
  e->add_option("--mode", eval.mode, "mean|sample")->capture_default_str();
  e->add_option("--out", eval.out, "Report path (default stdout)");

  SweepOptions sweep;
  auto* s = app.add_subcommand("sweep", "Evaluate over a grid of targets");
  s->add_option("--ckpt", sweep.ckpt)->required();
  s->add_option("--grid", sweep.grid, "JSON file or inline JSON")->required();
  s->add_option("--env", sweep.env);
  s->add_option("--spec", sweep.spec);
  s->add_option("--episodes", sweep.episodes)->capture_default_str();
  s->add_option("--seed", sweep.seed)->capture_default_str();
  s->add_option("--mode", sweep.mode, "mean|sample")->capture_default_str();
  s->add_option("--out", sweep.out, "CSV path (default stdout)");

  ScaleOptions scale;
  auto* sc = app.add_subcommand("scale", "Scale one labeled predicate of a formula");
  sc->add_option("--spec", scale.spec)->required();
  sc->add_option("--label", scale.label)->required();
  sc->add_option("--alpha", scale.alpha)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", 2, e.what());
  }

  try {
    if (*m) run_monitor(monitor, std::cout, std::cerr);
    if (*g) run_gen_data(gen, std::cout, std::cerr);
    if (*r) run_relabel(relabel, std::cout, std::cerr);
    if (*a) run_annotate(annotate, std::cout, std::cerr);
    if (*t) run_train(train, std::cout, std::cerr);
    if (*ab) run_train(ablate, std::cout, std::cerr);
    if (*e) run_eval(eval, std::cout, std::cerr);
    if (*s) run_sweep(sweep, std::cout, std::cerr);
    if (*sc) run_scale(scale, std::cout, std::cerr);
  } catch (const sdt::UsageError& e) {
    return report("usage", 2, e.what());
  } catch (const sdt::NumericalError& e) {
    return report("numerical", 4, e.what());
  } catch (const std::exception& e) {
    return report("data", 3, e.what());
  }
  return 0;
}
