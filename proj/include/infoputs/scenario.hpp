#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "infoputs/applications.hpp"
#include "infoputs/game.hpp"
#include "infoputs/policy.hpp"

namespace infoputs {

struct GameBlock {
  std::string family = "canonical";  // canonical | affine | tabulated | regime_change
  std::vector<double> states;        // empty: the family default
  std::size_t dominant = 1;
  double r = 1.0;
  double lambda = 1.0;
  // affine: Δu = a·A + b·θ + c
  double a = 1.0, b = 2.0, c = -1.0;
  // tabulated
  std::vector<double> A_grid;
  std::vector<std::vector<double>> table;
  // regime_change: γ = (κ - θ)(1 - βA), or per-state intercept/slope
  double kappa = 1.5, beta = 0.5, cost = 0.6;
  std::vector<double> intercept, slope;
  // irreversible investment on top of a flow game
  bool stopping = false;
  double W = -1.0;

  bool operator==(const GameBlock&) const = default;
};

struct PolicyBlock {
  std::string kind = "puts";
  double eta = 0.01;
  std::string tol_rule = "exact_appendix";
  double m = 0.0;
  double C = -1.0;          // override when positive
  double delta_bar = -1.0;  // override when positive
  double finite_delta_bar = 0.1;
  double t_delay = 0.0;     // delayed_jump only

  bool operator==(const PolicyBlock&) const = default;
};

struct PhiBlock {
  std::string kind = "discounted_mean";  // discounted_mean | terminal_level
  double rate = 1.0;
  double time = 10.0;

  bool operator==(const PhiBlock&) const = default;
};

struct RunBlock {
  std::string mode = "certify";
  std::vector<double> mu0{0.5};  // one number: weight on the dominant state
  double A0 = 0.0;
  std::size_t N = 1000;
  std::vector<std::size_t> N_values;  // concentration sweep; empty means {N}
  double horizon = 10.0;
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  std::size_t grid_mu = 200;
  std::size_t grid_A = 200;
  double epsilon = 1e-3;
  double delta = 0.5;
  std::string profile = "compliant";  // compliant | until_certified | until_upper_dominance
  bool detach = true;                 // finite mode: stop the policy once play ignores beliefs
  bool dp = false;                    // certify: also run the grid oracle
  std::size_t histories = 1000;
  PhiBlock phi;

  bool operator==(const RunBlock&) const = default;
};

struct OutputBlock {
  std::string directory = "runs";
  std::vector<std::string> formats{"csv", "json"};

  bool wants(const std::string& f) const;
  bool operator==(const OutputBlock&) const = default;
};

struct ScenarioConfig {
  GameBlock game;
  PolicyBlock policy;
  RunBlock run;
  OutputBlock output;

  bool operator==(const ScenarioConfig&) const = default;
};

const std::vector<std::string>& run_modes();

// Throws ConfigError naming the offending key.
ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig parse_scenario_file(const std::string& path);
nlohmann::json read_json_file(const std::string& path);
nlohmann::json to_json(const ScenarioConfig& cfg);

// Checks cross-block constraints by building the game, model inputs and policy parameters.
void validate(const ScenarioConfig& cfg);

GameSpec build_game(const GameBlock& g);
RegimeChangeSpec build_regime(const GameBlock& g);
PayoffFunctional build_phi(const PhiBlock& p);

}  // namespace infoputs
