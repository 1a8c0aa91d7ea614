#pragma once

// Flat key=value configuration shared by config files, CLI flags and the
// resolved-config snapshots written next to every run. Keys match the field
// names of EnvConfig, TabularHyperparams and DqnHyperparams.

#include "deepcars/dqn.hpp"
#include "deepcars/highway.hpp"
#include "deepcars/tabular.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace deepcars {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// All recognised keys, in snapshot order.
const std::vector<std::string>& known_keys();
bool is_known_key(const std::string& key);

class Settings {
 public:
  // Throws UsageError for an unknown key.
  void set(const std::string& key, const std::string& value);
  // Lines of key=value; '#' comments and blank lines ignored. Unknown keys and
  // malformed lines throw ParseError with the line number.
  void load_file(const std::filesystem::path& path);
  void load_text(const std::string& text);

  bool has(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;

  // Explicit values over built-in defaults. Throw ConfigError on bad values or bounds.
  EnvConfig env() const;
  TabularHyperparams tabular() const;
  DqnHyperparams dqn() const;
  std::uint64_t seed() const;

 private:
  std::map<std::string, std::string> values_;
};

// Comma-separated positive layer sizes, e.g. "64,128,128,64". UsageError on empty items.
std::vector<int> parse_hidden(const std::string& text);
std::string format_hidden(const std::vector<int>& hidden);
// shallow | medium | deep | ddqn16 | ddqn16x16
std::vector<int> arch_preset(const std::string& name);

KeyValues describe(const EnvConfig& config);
KeyValues describe(const TabularHyperparams& hp);
KeyValues describe(const DqnHyperparams& hp);

void write_key_values(const KeyValues& kv, const std::filesystem::path& path);

}  // namespace deepcars
