#include "deepcars/settings.hpp"

#include "deepcars/errors.hpp"
#include "deepcars/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace deepcars {

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      // environment
      "lanes", "rows", "spawn_interval", "occupancy_prob", "max_episode_steps", "seed",
      // shared
      "gamma", "train_steps",
      // tabular
      "alpha", "epsilon",
      // dqn
      "epsilon_start", "epsilon_end", "epsilon_decay_steps", "batch_size", "replay_capacity",
      "target_sync_period", "learn_start", "double_q", "fast_validation_period",
      "fast_validation_episodes", "deep_validation_period", "deep_validation_episodes", "hidden",
      "optimizer", "learning_rate"};
  return keys;
}

bool is_known_key(const std::string& key) {
  const auto& keys = known_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

void Settings::set(const std::string& key, const std::string& value) {
  if (!is_known_key(key)) throw UsageError("unknown configuration key '" + key + "'");
  values_[key] = value;
}

void Settings::load_text(const std::string& text) {
  std::istringstream in(text);
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value, got '" + line + "'", lineno);
    const std::string key = trim(line.substr(0, eq));
    if (!is_known_key(key)) throw ParseError("unknown configuration key '" + key + "'", lineno);
    values_[key] = trim(line.substr(eq + 1));
  }
}

void Settings::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    load_text(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::optional<std::string> Settings::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

namespace {

template <typename Int>
Int to_int(const std::string& key, const std::string& text) {
  Int v{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty())
    throw ConfigError("invalid integer for " + key + ": '" + text + "'");
  return v;
}

double to_real(const std::string& key, const std::string& text) {
  try {
    return parse_real(text);
  } catch (const ParseError&) {
    throw ConfigError("invalid number for " + key + ": '" + text + "'");
  }
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + text + "'");
}

template <typename T>
void assign(const Settings& s, const std::string& key, T& field) {
  auto v = s.get(key);
  if (!v) return;
  if constexpr (std::is_same_v<T, bool>)
    field = to_bool(key, *v);
  else if constexpr (std::is_floating_point_v<T>)
    field = to_real(key, *v);
  else
    field = to_int<T>(key, *v);
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

EnvConfig Settings::env() const {
  EnvConfig c;
  assign(*this, "lanes", c.lanes);
  assign(*this, "rows", c.rows);
  assign(*this, "spawn_interval", c.spawn_interval);
  assign(*this, "occupancy_prob", c.occupancy_prob);
  assign(*this, "max_episode_steps", c.max_episode_steps);
  assign(*this, "seed", c.seed);
  c.validate();
  return c;
}

std::uint64_t Settings::seed() const { return env().seed; }

TabularHyperparams Settings::tabular() const {
  TabularHyperparams hp;
  assign(*this, "gamma", hp.gamma);
  assign(*this, "alpha", hp.alpha);
  assign(*this, "epsilon", hp.epsilon);
  assign(*this, "train_steps", hp.train_steps);
  hp.validate();
  return hp;
}

DqnHyperparams Settings::dqn() const {
  DqnHyperparams hp;
  assign(*this, "gamma", hp.gamma);
  assign(*this, "epsilon_start", hp.epsilon_start);
  assign(*this, "epsilon_end", hp.epsilon_end);
  assign(*this, "epsilon_decay_steps", hp.epsilon_decay_steps);
  assign(*this, "batch_size", hp.batch_size);
  assign(*this, "replay_capacity", hp.replay_capacity);
  assign(*this, "target_sync_period", hp.target_sync_period);
  assign(*this, "train_steps", hp.train_steps);
  assign(*this, "learn_start", hp.learn_start);
  assign(*this, "double_q", hp.double_q);
  assign(*this, "fast_validation_period", hp.fast_validation_period);
  assign(*this, "fast_validation_episodes", hp.fast_validation_episodes);
  assign(*this, "deep_validation_period", hp.deep_validation_period);
  assign(*this, "deep_validation_episodes", hp.deep_validation_episodes);
  if (auto h = get("hidden")) {
    try {
      hp.hidden = parse_hidden(*h);
    } catch (const UsageError& e) {
      throw ConfigError(e.what());
    }
  }
  if (auto o = get("optimizer")) hp.optimizer = parse_optimizer(*o);
  assign(*this, "learning_rate", hp.learning_rate);
  hp.validate();
  return hp;
}

std::vector<int> parse_hidden(const std::string& text) {
  std::vector<int> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    const std::string item =
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    int v = 0;
    auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || end != item.data() + item.size() || v < 1)
      throw UsageError("invalid hidden layer list '" + text + "': bad item '" + item + "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_hidden(const std::vector<int>& hidden) {
  std::string s;
  for (std::size_t i = 0; i < hidden.size(); ++i) s += (i ? "," : "") + std::to_string(hidden[i]);
  return s;
}

std::vector<int> arch_preset(const std::string& name) {
  if (name == "shallow") return {32};
  if (name == "medium") return {32, 64, 32};
  if (name == "deep") return {64, 128, 128, 64};
  if (name == "ddqn16") return {16};
  if (name == "ddqn16x16") return {16, 16};
  throw UsageError("unknown architecture preset '" + name +
                   "' (expected shallow, medium, deep, ddqn16 or ddqn16x16)");
}

KeyValues describe(const EnvConfig& c) {
  return {{"lanes", std::to_string(c.lanes)},
          {"rows", std::to_string(c.rows)},
          {"spawn_interval", std::to_string(c.spawn_interval)},
          {"occupancy_prob", format_real(c.occupancy_prob)},
          {"max_episode_steps", std::to_string(c.max_episode_steps)},
          {"seed", std::to_string(c.seed)}};
}

KeyValues describe(const TabularHyperparams& hp) {
  return {{"gamma", format_real(hp.gamma)},
          {"alpha", format_real(hp.alpha)},
          {"epsilon", format_real(hp.epsilon)},
          {"train_steps", std::to_string(hp.train_steps)}};
}

KeyValues describe(const DqnHyperparams& hp) {
  return {{"gamma", format_real(hp.gamma)},
          {"epsilon_start", format_real(hp.epsilon_start)},
          {"epsilon_end", format_real(hp.epsilon_end)},
          {"epsilon_decay_steps", std::to_string(hp.epsilon_decay_steps)},
          {"batch_size", std::to_string(hp.batch_size)},
          {"replay_capacity", std::to_string(hp.replay_capacity)},
          {"target_sync_period", std::to_string(hp.target_sync_period)},
          {"train_steps", std::to_string(hp.train_steps)},
          {"learn_start", std::to_string(hp.learn_start)},
          {"double_q", bool_text(hp.double_q)},
          {"fast_validation_period", std::to_string(hp.fast_validation_period)},
          {"fast_validation_episodes", std::to_string(hp.fast_validation_episodes)},
          {"deep_validation_period", std::to_string(hp.deep_validation_period)},
          {"deep_validation_episodes", std::to_string(hp.deep_validation_episodes)},
          {"hidden", format_hidden(hp.hidden)},
          {"optimizer", optimizer_name(hp.optimizer)},
          {"learning_rate", format_real(hp.learning_rate)}};
}

void write_key_values(const KeyValues& kv, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

}  // namespace deepcars
