// picarz: simulate, mesh, select-rank, fit, predict, report, benchmark.
// Exit codes: 0 success, 1 numerical failure, 2 I/O or configuration error.

#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "picarz/error.hpp"

namespace {

constexpr int kNumerical = 1;
constexpr int kInput = 2;

picarz::Config load(const std::string& path, const std::vector<std::string>& overrides) {
  picarz::Config c = picarz::Config::load(path);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw picarz::InputError("--set expects key=value, found '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  std::set<std::string> seen;
  for (const auto& [key, value] : c.values()) {
    if (key.rfind("paths.", 0) != 0 || value.empty()) continue;
    if (!seen.insert(value).second) throw picarz::InputError("path '" + value + "' is used by more than one setting");
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  using Command = std::function<void(const picarz::Config&)>;
  const std::vector<std::pair<std::string, std::pair<std::string, Command>>> commands = {
      {"simulate", {"Draw synthetic two-part datasets", picarz::cli::cmd_simulate}},
      {"mesh", {"Build the mesh and Moran basis for a dataset", picarz::cli::cmd_mesh}},
      {"select-rank", {"Choose basis ranks by holdout GLM fits", picarz::cli::cmd_select_rank}},
      {"fit", {"Run the MCMC sampler", picarz::cli::cmd_fit}},
      {"predict", {"Predict the validation rows from a chain", picarz::cli::cmd_predict}},
      {"report", {"Aggregate validation summaries and write surfaces", picarz::cli::cmd_report}},
      {"benchmark", {"Simulate, fit and score replicates end to end", picarz::cli::cmd_benchmark}},
  };

  CLI::App app{"Bayesian spatial two-part models with projection-based CAR priors"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::map<CLI::App*, Command> dispatch;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("config", config_path, "Flat section.key = value settings file")->required();
    sub->add_option("--set", overrides, "Override one setting, key=value (repeatable)");
    dispatch[sub] = entry.second;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInput;
  }

  try {
    const picarz::Config config = load(config_path, overrides);
    for (const auto& [sub, run] : dispatch) {
      if (sub->parsed()) run(config);
    }
    return 0;
  } catch (const picarz::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const picarz::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  } catch (const picarz::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return kNumerical;
  }
}
