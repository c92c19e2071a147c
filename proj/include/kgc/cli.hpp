#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace kgc::cli {

/// Built-in configuration: mock backends for every role and per-command
/// sections with library defaults. A config file is merged over it.
nlohmann::json default_config();

/// Sets `dotted.path` in `config`; `value` is parsed as JSON when possible
/// and taken as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& dotted_path, const std::string& value);

/// Seed of one module, split from the global seed.
std::uint64_t module_seed(std::uint64_t global_seed, const std::string& module);

/// Entry point; args exclude the program name. Returns the process exit code:
/// 0 success, 2 config error, 3 stall or unfillable strata, 4 backend failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kgc::cli
