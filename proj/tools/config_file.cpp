#include "config_file.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <set>
#include <sstream>

#include "spur/error.hpp"
#include "spur/format.hpp"

namespace spur::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* what) {
  throw ConfigError("config key '" + std::string(key) + "': '" + std::string(value) +
                    "' is not " + what);
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    bad_value(key, value, "a valid integer");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(out)) {
    bad_value(key, value, "a finite real number");
  }
  return out;
}

template <typename Fn>
auto parse_enum(std::string_view key, std::string_view value, Fn fn) {
  try {
    return fn(value);
  } catch (const ConfigError& e) {
    throw ConfigError("config key '" + std::string(key) + "': " + e.what());
  }
}

struct KeySpec {
  std::string_view key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
KeySpec size_key(std::string_view key, T ExperimentConfig::*outer, std::size_t T::*field) {
  return {key,
          [=](ExperimentConfig& c, std::string_view v) {
            c.*outer.*field = parse_integer<std::size_t>(key, v);
          },
          [=](const ExperimentConfig& c) { return std::to_string(c.*outer.*field); }};
}

template <typename T, typename F>
KeySpec int_key(std::string_view key, T ExperimentConfig::*outer, F T::*field) {
  return {key,
          [=](ExperimentConfig& c, std::string_view v) {
            c.*outer.*field = parse_integer<F>(key, v);
          },
          [=](const ExperimentConfig& c) { return std::to_string(c.*outer.*field); }};
}

template <typename T>
KeySpec real_key(std::string_view key, T ExperimentConfig::*outer, double T::*field) {
  return {key,
          [=](ExperimentConfig& c, std::string_view v) { c.*outer.*field = parse_real(key, v); },
          [=](const ExperimentConfig& c) { return format_double(c.*outer.*field); }};
}

const std::vector<KeySpec>& key_table() {
  using C = ExperimentConfig;
  static const std::vector<KeySpec> table = {
      {"model.kind",
       [](C& c, std::string_view v) { c.model.kind = parse_enum("model.kind", v, parse_model_kind); },
       [](const C& c) { return std::string(to_string(c.model.kind)); }},
      size_key("model.layers", &C::model, &ModelConfig::layers),
      size_key("model.hidden_dim", &C::model, &ModelConfig::hidden_dim),
      size_key("model.heads", &C::model, &ModelConfig::heads),
      size_key("model.ffn_dim", &C::model, &ModelConfig::ffn_dim),
      size_key("model.vocab", &C::model, &ModelConfig::vocab),
      size_key("model.max_seq", &C::model, &ModelConfig::max_seq),
      size_key("model.classes", &C::model, &ModelConfig::classes),
      size_key("model.input_dim", &C::model, &ModelConfig::input_dim),
      int_key("model.seed", &C::model, &ModelConfig::seed),
      {"task",
       [](C& c, std::string_view v) { c.data.task = parse_enum("task", v, parse_task_kind); },
       [](const C& c) { return std::string(to_string(c.data.task)); }},
      size_key("data.n", &C::data, &DataConfig::n),
      size_key("data.len", &C::data, &DataConfig::len),
      size_key("data.vocab", &C::data, &DataConfig::vocab),
      size_key("data.dim", &C::data, &DataConfig::dim),
      size_key("data.classes", &C::data, &DataConfig::classes),
      real_key("data.spread", &C::data, &DataConfig::spread),
      real_key("data.test_fraction", &C::data, &DataConfig::test_fraction),
      {"method",
       [](C& c, std::string_view v) { c.method = parse_enum("method", v, parse_method); },
       [](const C& c) { return std::string(to_string(c.method)); }},
      {"variant",
       [](C& c, std::string_view v) {
         c.variant = parse_enum("variant", v, parse_deviance_variant);
       },
       [](const C& c) { return std::string(to_string(c.variant)); }},
      {"domain",
       [](C& c, std::string_view v) { c.domain = parse_enum("domain", v, parse_target_domain); },
       [](const C& c) { return std::string(to_string(c.domain)); }},
      real_key("schedule.v_initial", &C::schedule, &PruningSchedule::v_initial),
      real_key("schedule.v_final", &C::schedule, &PruningSchedule::v_final),
      int_key("schedule.t_i", &C::schedule, &PruningSchedule::t_i),
      int_key("schedule.ramp_steps", &C::schedule, &PruningSchedule::ramp_steps),
      int_key("schedule.cadence", &C::schedule, &PruningSchedule::cadence),
      int_key("schedule.total_steps", &C::schedule, &PruningSchedule::total_steps),
      real_key("lambda_schedule.lambda_final", &C::lambda_schedule, &LambdaSchedule::lambda_final),
      int_key("lambda_schedule.t_i", &C::lambda_schedule, &LambdaSchedule::t_i),
      int_key("lambda_schedule.ramp_steps", &C::lambda_schedule, &LambdaSchedule::ramp_steps),
      real_key("optimizer.learning_rate", &C::optimizer, &AdamConfig::learning_rate),
      real_key("optimizer.beta1", &C::optimizer, &AdamConfig::beta1),
      real_key("optimizer.beta2", &C::optimizer, &AdamConfig::beta2),
      real_key("optimizer.eps", &C::optimizer, &AdamConfig::eps),
      {"batch_size",
       [](C& c, std::string_view v) { c.batch_size = parse_integer<std::size_t>("batch_size", v); },
       [](const C& c) { return std::to_string(c.batch_size); }},
      {"eval_every",
       [](C& c, std::string_view v) { c.eval_every = parse_integer<std::int64_t>("eval_every", v); },
       [](const C& c) { return std::to_string(c.eval_every); }},
      {"seed",
       [](C& c, std::string_view v) { c.seed = parse_integer<std::uint64_t>("seed", v); },
       [](const C& c) { return std::to_string(c.seed); }},
  };
  return table;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, std::string_view source) {
  ExperimentConfig config = reference_experiment();
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  const auto& table = key_table();
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) {
      throw ConfigError(where + ": expected 'key = value'");
    }
    const std::string_view key = trim(view.substr(0, eq));
    const std::string_view value = trim(view.substr(eq + 1));
    auto it = std::find_if(table.begin(), table.end(),
                           [&](const KeySpec& k) { return k.key == key; });
    if (it == table.end()) throw ConfigError(where + ": unknown key '" + std::string(key) + "'");
    if (!seen.emplace(key).second) {
      throw ConfigError(where + ": key '" + std::string(key) + "' given twice");
    }
    if (value.empty()) throw ConfigError(where + ": key '" + std::string(key) + "' has no value");
    try {
      it->set(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  if (!seen.contains("lambda_schedule.t_i")) config.lambda_schedule.t_i = config.schedule.t_i;
  if (!seen.contains("lambda_schedule.ramp_steps")) {
    config.lambda_schedule.ramp_steps = config.schedule.ramp_steps;
  }
  config.validate();
  return config;
}

ExperimentConfig parse_config_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_config(in);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  return parse_config(in, path.string());
}

std::string echo_config(const ExperimentConfig& config) {
  std::string out;
  for (const KeySpec& k : key_table()) {
    out += std::string(k.key) + " = " + k.get(config) + "\n";
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const KeySpec& k : key_table()) keys.emplace_back(k.key);
  return keys;
}

}  // namespace spur::cli
