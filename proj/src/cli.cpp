#include "deepcars/cli.hpp"

#include "deepcars/dqn.hpp"
#include "deepcars/errors.hpp"
#include "deepcars/metrics.hpp"
#include "deepcars/model_io.hpp"
#include "deepcars/rollout.hpp"
#include "deepcars/settings.hpp"
#include "deepcars/tabular.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

namespace fs = std::filesystem;

namespace deepcars {
namespace {

// Evaluation and demo rollouts run on a stream disjoint from the training seed.
constexpr std::uint64_t kEvaluationStream = 0xE7A1;

std::string flag_for(const std::string& key) {
  std::string f = "--" + key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

// Per-subcommand storage for configuration overrides given as flags.
struct Overrides {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool double_q = false;
  CLI::Option* double_q_flag = nullptr;
  std::string arch;
  CLI::Option* arch_option = nullptr;
  std::string config_path;
  std::string out_dir = "out";

  void add_keys(CLI::App* app, const std::vector<std::string>& keys) {
    for (const auto& key : keys) {
      if (key == "double_q") {
        double_q_flag = app->add_flag("--double-q", double_q, "Use Double-DQN targets");
        continue;
      }
      if (key == "train_steps") {
        options[key] = app->add_option("--steps,--train-steps", values[key],
                                       "Training environment steps");
        continue;
      }
      options[key] = app->add_option(flag_for(key), values[key], "Override '" + key + "'");
    }
    app->add_option("--config", config_path, "Flat key=value config file");
    app->add_option("--out", out_dir, "Output directory")->capture_default_str();
  }

  // Config file first, then flags on top.
  Settings resolve() const {
    Settings s;
    if (!config_path.empty()) s.load_file(config_path);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) s.set(key, values.at(key));
    if (double_q_flag && double_q_flag->count() > 0) s.set("double_q", "true");
    if (arch_option && arch_option->count() > 0) s.set("hidden", format_hidden(arch_preset(arch)));
    return s;
  }
};

const std::vector<std::string> kEnvKeys = {"lanes", "rows", "spawn_interval", "occupancy_prob",
                                           "max_episode_steps", "seed"};
const std::vector<std::string> kTabularKeys = {"gamma", "alpha", "epsilon", "train_steps"};
const std::vector<std::string> kDqnKeys = {
    "gamma", "epsilon_start", "epsilon_end", "epsilon_decay_steps", "batch_size",
    "replay_capacity", "target_sync_period", "train_steps", "learn_start", "double_q",
    "fast_validation_period", "fast_validation_episodes", "deep_validation_period",
    "deep_validation_episodes", "hidden", "optimizer", "learning_rate"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

KeyValues join(KeyValues a, const KeyValues& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing ") + what);
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " not found: '" + path + "'");
}

void write_plot_if_any(const RunMetrics& m, const fs::path& path, const std::string& label,
                       std::ostream& out) {
  if (m.windows.empty()) {
    out << "no complete 100-episode window; skipped " << path.string() << '\n';
    return;
  }
  PlotOptions opts;
  opts.title = label;
  plot_svg({window_series(m, label)}, path, opts);
  out << "wrote " << path.string() << '\n';
}

int cmd_train_tabular(const Overrides& o, std::ostream& out) {
  const Settings s = o.resolve();
  const EnvConfig env = s.env();
  const TabularHyperparams hp = s.tabular();
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  write_key_values(join(describe(env), describe(hp)), dir / "config.txt");

  const TabularRun run = train_tabular(env, hp, env.seed);
  save_qtable(run.table, dir / "qtable.txt");
  write_csv(run.metrics, dir);
  out << "training accuracy: " << format_accuracy(run.metrics.accuracy()) << " (passed "
      << run.metrics.passed << ", collided " << run.metrics.collided << ", states "
      << run.table.size() << ")\n";
  for (const char* f : {"config.txt", "qtable.txt", "steps.csv", "windows.csv", "validation.csv",
                        "summary.csv"})
    out << "wrote " << (dir / f).string() << '\n';
  write_plot_if_any(run.metrics, dir / "reward.svg", "tabular Q-learning", out);
  return kExitOk;
}

int cmd_train_dqn(const Overrides& o, std::ostream& out) {
  const Settings s = o.resolve();
  const EnvConfig env = s.env();
  const DqnHyperparams hp = s.dqn();
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  write_key_values(join(describe(env), describe(hp)), dir / "config.txt");

  const std::string label =
      std::string(hp.double_q ? "DDQN" : "DQN") + " {" + format_hidden(hp.hidden) + "}";
  out << "training " << label << " for " << hp.train_steps << " steps\n";
  const DqnRun run = train_dqn(env, hp, env.seed, [&](const ValidationRecord& r) {
    out << "step " << r.step << ": validation mean reward " << format_real(r.mean_reward)
        << ", accuracy " << format_accuracy(r.accuracy) << (r.is_new_best ? " (new best)" : "")
        << '\n';
  });

  write_csv(run.metrics, dir);
  save_model(run.final_params, hp.optimizer, dir / "final_model.txt");
  if (run.best) {
    write_checkpoint(*run.best, env, hp, env.seed, dir, "best_model");
    out << "best checkpoint: step " << run.best->training_step << ", mean validation reward "
        << format_real(run.best->mean_validation_reward) << '\n';
    out << "wrote " << (dir / "best_model.txt").string() << '\n'
        << "wrote " << (dir / "best_model.meta").string() << '\n';
  } else {
    out << "no validation ran; no best checkpoint written\n";
  }
  for (const char* f : {"config.txt", "final_model.txt", "steps.csv", "windows.csv",
                        "validation.csv", "summary.csv"})
    out << "wrote " << (dir / f).string() << '\n';
  write_plot_if_any(run.metrics, dir / "reward.svg", label, out);
  if (!run.metrics.validations.empty()) {
    PlotSeries v{label + " validation", {}, {}};
    for (const auto& r : run.metrics.validations) {
      v.x.push_back(static_cast<double>(r.step));
      v.y.push_back(r.mean_reward);
    }
    PlotOptions opts;
    opts.title = "validation mean episode reward";
    opts.y_label = "mean episode reward";
    plot_svg({v}, dir / "validation.svg", opts);
    out << "wrote " << (dir / "validation.svg").string() << '\n';
  }
  return kExitOk;
}

// A loaded policy: either a Q-table or a network.
struct Policy {
  std::optional<QTable> table;
  std::optional<Mlp> network;

  Action operator()(const EnvState& s) const {
    if (table) return argmax_action(table->values(encode_tabular(s)));
    return greedy_action(*network, s);
  }
};

Policy load_policy(const std::string& path, const EnvConfig& env) {
  require_file(path, "model file");
  Policy p;
  if (is_model_file(path)) {
    p.network = load_model(path).params;
    if (p.network->input_size() != dqn_state_size(env))
      throw UsageError("model '" + path + "' expects " + std::to_string(p.network->input_size()) +
                       " inputs but a " + std::to_string(env.rows) + "x" +
                       std::to_string(env.lanes) + " environment gives " +
                       std::to_string(dqn_state_size(env)) +
                       "; pass the run's config.txt via --config");
    if (p.network->output_size() != kNumActions)
      throw ParseError("model '" + path + "' does not have three outputs");
  } else {
    p.table = load_qtable(path);
    for (const auto& [state, q] : p.table->sorted_entries()) {
      if (static_cast<int>(state.distances.size()) != env.lanes)
        throw UsageError("Q-table '" + path + "' was trained with " +
                         std::to_string(state.distances.size()) + " lanes, environment has " +
                         std::to_string(env.lanes) + "; pass the run's config.txt via --config");
      break;
    }
  }
  return p;
}

int cmd_evaluate(const Overrides& o, const std::string& model, std::int64_t steps,
                 std::ostream& out) {
  if (steps < 1) throw UsageError("--steps must be >= 1");
  const Settings s = o.resolve();
  const EnvConfig env = s.env();
  const Policy policy = load_policy(model, env);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  KeyValues snapshot = describe(env);
  snapshot.emplace_back("# model", model);
  snapshot.emplace_back("# eval_steps", std::to_string(steps));
  write_key_values(snapshot, dir / "config.txt");

  const EvalResult r = rollout_steps(env, steps, mix_seed(env.seed, kEvaluationStream), policy);
  out << "accuracy: " << format_accuracy(r.accuracy()) << " (passed " << r.passed << ", collided "
      << r.collided << ", steps " << r.steps << ", episodes " << r.episodes << ")\n";
  write_key_values({{"steps", std::to_string(r.steps)},
                    {"episodes", std::to_string(r.episodes)},
                    {"passed", std::to_string(r.passed)},
                    {"collided", std::to_string(r.collided)},
                    {"accuracy", r.accuracy() ? format_real(*r.accuracy()) : "n/a"},
                    {"mean_episode_reward", format_real(r.mean_episode_reward)}},
                   dir / "evaluation.txt");
  out << "wrote " << (dir / "config.txt").string() << '\n'
      << "wrote " << (dir / "evaluation.txt").string() << '\n';
  return kExitOk;
}

int cmd_demo(const Overrides& o, const std::string& model, std::int64_t episodes,
             std::ostream& out) {
  if (episodes < 1) throw UsageError("--episodes must be >= 1");
  const Settings s = o.resolve();
  const EnvConfig env = s.env();
  const Policy policy = load_policy(model, env);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  write_key_values(describe(env), dir / "config.txt");

  Highway world(env);
  for (std::int64_t e = 0; e < episodes; ++e) {
    world.reset(mix_seed(mix_seed(env.seed, kEvaluationStream), static_cast<std::uint64_t>(e)));
    out << "episode " << e + 1 << "\n" << render_ascii(world.state()) << '\n';
    double total = 0.0;
    for (;;) {
      const Action a = policy(world.state());
      const StepOutcome step = world.step(a);
      total += step.reward;
      out << "step " << step.next_state.step_count << " action=" << action_name(a)
          << " reward=" << (step.reward > 0 ? "+1" : "-1")
          << (step.collision ? " COLLISION" : step.timeout ? " timeout" : "") << '\n'
          << render_ascii(step.next_state) << '\n';
      if (step.terminal) break;
    }
    out << "episode " << e + 1 << " reward: " << format_real(total) << '\n';
  }
  return kExitOk;
}

int cmd_plot(const std::vector<std::string>& inputs, const std::vector<std::string>& labels,
             const std::string& out_dir, const std::string& title, std::ostream& out) {
  if (inputs.empty()) throw UsageError("plot needs at least one --input");
  if (!labels.empty() && labels.size() != inputs.size())
    throw UsageError("--label must be given once per --input");
  std::vector<PlotSeries> series;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    fs::path dir = inputs[i];
    if (fs::is_regular_file(dir)) dir = dir.parent_path();
    if (!fs::is_regular_file(dir / "windows.csv"))
      throw UsageError("no windows.csv under '" + inputs[i] + "'");
    const RunMetrics m = read_csv(dir);
    std::string label = labels.empty() ? fs::path(inputs[i]).filename().string() : labels[i];
    if (m.windows.empty()) throw UsageError("'" + inputs[i] + "' has no window records to plot");
    series.push_back(window_series(m, label));
  }
  const fs::path dir = out_dir;
  fs::create_directories(dir);
  KeyValues snapshot;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    snapshot.emplace_back("# input", inputs[i] + (labels.empty() ? "" : " as " + labels[i]));
  write_key_values(snapshot, dir / "config.txt");
  PlotOptions opts;
  opts.title = title;
  opts.x_label = "100-episode window";
  plot_svg(series, dir / "plot.svg", opts);
  out << "wrote " << (dir / "config.txt").string() << '\n'
      << "wrote " << (dir / "plot.svg").string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Highway lane-change reinforcement learning workbench"};
  app.require_subcommand(1);

  Overrides tab_o, dqn_o, eval_o, demo_o;

  auto* tab = app.add_subcommand("train-tabular", "Train epsilon-greedy tabular Q-learning");
  tab_o.add_keys(tab, concat(kEnvKeys, kTabularKeys));

  auto* dqn = app.add_subcommand("train-dqn", "Train DQN / Double-DQN with real-time validation");
  dqn_o.add_keys(dqn, concat(kEnvKeys, kDqnKeys));
  dqn_o.arch_option = dqn->add_option("--arch", dqn_o.arch,
                                      "Preset: shallow|medium|deep|ddqn16|ddqn16x16");
  dqn_o.arch_option->excludes(dqn_o.options.at("hidden"));

  auto* eval = app.add_subcommand("evaluate", "Greedy evaluation of a saved model or Q-table");
  eval_o.add_keys(eval, kEnvKeys);
  std::string eval_model;
  std::int64_t eval_steps = 100'000;
  eval->add_option("--model", eval_model, "Model (network or Q-table) file")->required();
  eval->add_option("--steps", eval_steps, "Evaluation steps")->capture_default_str();

  auto* demo = app.add_subcommand("demo", "Print ASCII greedy rollouts of a saved model");
  demo_o.add_keys(demo, kEnvKeys);
  std::string demo_model;
  std::int64_t demo_episodes = 1;
  demo->add_option("--model", demo_model, "Model (network or Q-table) file")->required();
  demo->add_option("--episodes", demo_episodes, "Episodes to render")->capture_default_str();

  auto* plot = app.add_subcommand("plot", "Plot window rewards of one or more runs as SVG");
  std::vector<std::string> plot_inputs, plot_labels;
  std::string plot_out = "out", plot_title;
  plot->add_option("--input", plot_inputs, "Run directory or windows.csv (repeatable)")
      ->required();
  plot->add_option("--label", plot_labels, "Legend label per input (repeatable)");
  plot->add_option("--title", plot_title, "Chart title");
  plot->add_option("--out", plot_out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsageError;
  }

  try {
    if (tab->parsed()) return cmd_train_tabular(tab_o, out);
    if (dqn->parsed()) return cmd_train_dqn(dqn_o, out);
    if (eval->parsed()) return cmd_evaluate(eval_o, eval_model, eval_steps, out);
    if (demo->parsed()) return cmd_demo(demo_o, demo_model, demo_episodes, out);
    if (plot->parsed()) return cmd_plot(plot_inputs, plot_labels, plot_out, plot_title, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsageError;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitUsageError;
}

}  // namespace deepcars
