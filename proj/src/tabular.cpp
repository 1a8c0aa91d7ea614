#include "deepcars/tabular.hpp"

#include "deepcars/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace deepcars {

void TabularHyperparams::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in [0, 1)");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must be in [0, 1]");
  if (train_steps < 0) throw ConfigError("train_steps must be >= 0");
}

QValues QTable::values(const TabularState& s) const {
  auto it = entries_.find(s);
  return it == entries_.end() ? QValues{} : it->second;
}

void QTable::set(const TabularState& s, Action a, double v) {
  if (!std::isfinite(v)) throw NumericError("non-finite Q-value");
  entries_[s][action_code(a)] = v;
}

std::vector<std::pair<TabularState, QValues>> QTable::sorted_entries() const {
  std::vector<std::pair<TabularState, QValues>> out(entries_.begin(), entries_.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

Action argmax_action(const QValues& q) {
  int best = 0;
  for (int a = 1; a < kNumActions; ++a)
    if (q[a] > q[best]) best = a;
  return action_from_code(best);
}

void q_update(QTable& table, const TabularState& s, Action a, double reward,
              const TabularState& s_next, bool terminal, const TabularHyperparams& hp) {
  if (!std::isfinite(reward)) throw NumericError("non-finite reward");
  const QValues next = table.values(s_next);
  const double bootstrap = terminal ? 0.0 : *std::max_element(next.begin(), next.end());
  const double old = table.value(s, a);
  table.set(s, a, old + hp.alpha * (reward + hp.gamma * bootstrap - old));
}

Action select_action(const QTable& table, const TabularState& s, double epsilon, Rng& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, kNumActions - 1);
    return action_from_code(pick(rng));
  }
  return argmax_action(table.values(s));
}

TabularRun train_tabular(const EnvConfig& config, const TabularHyperparams& hp,
                         std::uint64_t seed) {
  config.validate();
  hp.validate();
  TabularRun run;
  Highway env(config);
  env.reset(seed);
  Rng policy_rng(stream_seed(seed, Stream::Policy));

  TabularState s = encode_tabular(env.state());
  std::int64_t episode = 0;
  double episode_reward = 0.0;
  for (std::int64_t t = 1; t <= hp.train_steps; ++t) {
    const Action a = select_action(run.table, s, hp.epsilon, policy_rng);
    const StepOutcome out = env.step(a);
    const TabularState s_next = encode_tabular(out.next_state);
    // Timeouts are not MDP terminals, so only collisions cut the bootstrap.
    q_update(run.table, s, a, out.reward, s_next, out.collision, hp);

    run.metrics.steps.push_back({t, episode, out.reward, hp.epsilon});
    run.metrics.passed += out.cars_passed_this_step;
    if (out.collision) run.metrics.collided += 1;
    episode_reward += out.reward;

    if (out.terminal) {
      run.metrics.end_episode(episode_reward, t);
      episode_reward = 0.0;
      ++episode;
      s = encode_tabular(env.reset());
    } else {
      s = s_next;
    }
  }
  return run;
}

RunMetrics evaluate_tabular(const QTable& table, const EnvConfig& config, std::int64_t steps,
                            std::uint64_t seed) {
  if (steps < 1) throw UsageError("evaluation needs at least one step");
  RunMetrics m;
  Highway env(config);
  env.reset(seed);
  double episode_reward = 0.0;
  for (std::int64_t t = 1; t <= steps; ++t) {
    const StepOutcome out = env.step(argmax_action(table.values(encode_tabular(env.state()))));
    m.passed += out.cars_passed_this_step;
    if (out.collision) m.collided += 1;
    episode_reward += out.reward;
    if (out.terminal) {
      m.end_episode(episode_reward, t);
      episode_reward = 0.0;
      env.reset();
    }
  }
  return m;
}

void save_qtable(const QTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kQTableHeader << '\n';
  for (const auto& [state, q] : table.sorted_entries()) {
    for (int v : state.as_vector()) out << v << ' ';
    out << '|';
    for (double v : q) out << ' ' << format_real(v);
    out << '\n';
  }
}

QTable load_qtable(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open Q-table " + path.string());
  QTable table;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != kQTableHeader)
        throw ParseError("not a Q-table file (expected '" + std::string(kQTableHeader) + "')", 1);
      header_seen = true;
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    const auto bar = line.find('|');
    if (bar == std::string::npos) throw ParseError("missing '|' separator", lineno);
    std::vector<int> key;
    {
      std::istringstream ks(line.substr(0, bar));
      for (std::string tok; ks >> tok;) {
        try {
          std::size_t used = 0;
          key.push_back(std::stoi(tok, &used));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          throw ParseError("bad state integer '" + tok + "'", lineno);
        }
      }
    }
    std::vector<double> q;
    {
      std::istringstream vs(line.substr(bar + 1));
      for (std::string tok; vs >> tok;) {
        try {
          q.push_back(parse_real(tok));
        } catch (const ParseError& e) {
          throw ParseError(e.what(), lineno);
        }
      }
    }
    if (q.size() != kNumActions) throw ParseError("expected three Q-values", lineno);
    TabularState s;
    try {
      s = TabularState::from_vector(key);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
    for (int a = 0; a < kNumActions; ++a) table.set(s, action_from_code(a), q[a]);
  }
  if (!header_seen) throw ParseError("empty Q-table file");
  return table;
}

}  // namespace deepcars
