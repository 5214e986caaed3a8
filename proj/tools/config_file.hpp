#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "spur/trainer.hpp"

namespace spur::cli {

// Flat `key = value` experiment configuration. Keys mirror ExperimentConfig
// field paths with `.` nesting (e.g. `schedule.v_final = 0.03`); `#` starts a
// comment. Unknown or repeated keys are errors. Missing keys keep the
// reference-experiment defaults; lambda_schedule.t_i / ramp_steps default to
// the pruning schedule's values.
ExperimentConfig parse_config(std::istream& in, std::string_view source = "<config>");
ExperimentConfig parse_config_text(std::string_view text);
// Throws ConfigError naming the path when it cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

// Every key with its effective value, one per line in documented order.
// Feeding the result back to parse_config reproduces the same config.
std::string echo_config(const ExperimentConfig& config);

// All recognised keys, in echo order.
std::vector<std::string> config_keys();

}  // namespace spur::cli
