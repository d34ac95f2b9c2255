#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "infoputs/run.hpp"

int main(int argc, char** argv) {
  using namespace infoputs;
  CLI::App app{"Informational puts: certification, simulation and diagnostics"};
  app.set_version_flag("--version", std::string(software_version()));

  std::string mode, config, out;
  long long seed = -1;
  std::string modes;
  for (const auto& m : run_modes()) modes += (modes.empty() ? "" : " | ") + m;
  app.add_option("mode", mode, modes)->required()->check(CLI::IsMember(run_modes()));
  app.add_option("-c,--config", config, "scenario JSON file")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "overrides run.seed")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out, "overrides output.directory");
  CLI11_PARSE(app, argc, argv);

  try {
    // command-line values go in before parsing so validation sees them
    nlohmann::json j = read_json_file(config);
    if (!j.is_object()) throw ConfigError("config: expected an object");
    j["run"]["mode"] = mode;
    if (seed >= 0) j["run"]["seed"] = static_cast<std::uint64_t>(seed);
    if (!out.empty()) j["output"]["directory"] = out;
    ScenarioConfig cfg = parse_scenario(j);
    RunManifest man = run(cfg);
    std::cout << man.directory << '\n' << man.summary.dump(2) << '\n';
    return man.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
