#include "infoputs/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace infoputs {

using nlohmann::json;

namespace {

// Reads the keys of one JSON object, remembering which it saw so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const json& raw(const char* key) { return obj_.at(key); }
  std::string name(const char* key) const { return where_ + "." + key; }

  template <class T>
  void get(const char* key, T& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    out = convert<T>(v, name(key));
  }

  void finish() const {
    for (const auto& item : obj_.items())
      if (!seen_.count(item.key())) throw ConfigError(where_ + "." + item.key() + ": unknown key");
  }

  template <class T>
  static T convert(const json& v, const std::string& key) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(key + ": expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(key + ": expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(key + ": expected a nonnegative integer");
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(key + ": expected a number");
      return v.get<T>();
    } else {
      if (!v.is_array()) throw ConfigError(key + ": expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], key + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

const std::set<std::string> kFamilies{"canonical", "affine", "tabulated", "regime_change"};
const std::set<std::string> kProfiles{"compliant", "until_certified", "until_upper_dominance"};

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

GameBlock parse_game(const json& j) {
  GameBlock g;
  Reader r(j, "game");
  if (!r.has("family")) throw ConfigError("game.family: missing required key");
  r.get("family", g.family);
  r.get("states", g.states);
  r.get("dominant", g.dominant);
  r.get("r", g.r);
  r.get("lambda", g.lambda);
  if (r.has("parameters")) {
    Reader p(r.raw("parameters"), "game.parameters");
    p.get("a", g.a);
    p.get("b", g.b);
    p.get("c", g.c);
    p.get("A_grid", g.A_grid);
    p.get("table", g.table);
    p.get("kappa", g.kappa);
    p.get("beta", g.beta);
    p.get("cost", g.cost);
    p.get("intercept", g.intercept);
    p.get("slope", g.slope);
    p.finish();
  }
  if (r.has("stopping")) {
    Reader s(r.raw("stopping"), "game.stopping");
    s.get("enabled", g.stopping);
    s.get("W", g.W);
    s.finish();
  }
  r.finish();
  return g;
}

PolicyBlock parse_policy(const json& j) {
  PolicyBlock p;
  Reader r(j, "policy");
  r.get("kind", p.kind);
  r.get("eta", p.eta);
  r.get("tol_rule", p.tol_rule);
  r.get("m", p.m);
  r.get("C", p.C);
  r.get("delta_bar", p.delta_bar);
  r.get("finite_delta_bar", p.finite_delta_bar);
  r.get("t_delay", p.t_delay);
  r.finish();
  return p;
}

RunBlock parse_run(const json& j) {
  RunBlock b;
  Reader r(j, "run");
  r.get("mode", b.mode);
  if (r.has("mu0")) {
    const json& v = r.raw("mu0");
    if (v.is_number()) b.mu0 = {Reader::convert<double>(v, "run.mu0")};
    else b.mu0 = Reader::convert<std::vector<double>>(v, "run.mu0");
  }
  r.get("A0", b.A0);
  r.get("N", b.N);
  r.get("N_values", b.N_values);
  r.get("horizon", b.horizon);
  r.get("trials", b.trials);
  r.get("seed", b.seed);
  r.get("grid_mu", b.grid_mu);
  r.get("grid_A", b.grid_A);
  r.get("epsilon", b.epsilon);
  r.get("delta", b.delta);
  r.get("profile", b.profile);
  r.get("detach", b.detach);
  r.get("dp", b.dp);
  r.get("histories", b.histories);
  if (r.has("phi")) {
    Reader p(r.raw("phi"), "run.phi");
    p.get("kind", b.phi.kind);
    p.get("rate", b.phi.rate);
    p.get("time", b.phi.time);
    p.finish();
  }
  r.finish();
  return b;
}

OutputBlock parse_output(const json& j) {
  OutputBlock o;
  Reader r(j, "output");
  r.get("directory", o.directory);
  r.get("formats", o.formats);
  r.finish();
  return o;
}

}  // namespace

bool OutputBlock::wants(const std::string& f) const {
  return std::find(formats.begin(), formats.end(), f) != formats.end();
}

const std::vector<std::string>& run_modes() {
  static const std::vector<std::string> m{"certify", "simulate",  "finite",   "concentration",
                                          "audit",   "constants", "dominance", "private-bound"};
  return m;
}

ScenarioConfig parse_scenario(const json& j) {
  ScenarioConfig cfg;
  Reader top(j, "config");
  if (!top.has("game")) throw ConfigError("config.game: missing required key");
  cfg.game = parse_game(top.raw("game"));
  if (top.has("policy")) cfg.policy = parse_policy(top.raw("policy"));
  if (top.has("run")) cfg.run = parse_run(top.raw("run"));
  if (top.has("output")) cfg.output = parse_output(top.raw("output"));
  top.finish();
  validate(cfg);
  return cfg;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

ScenarioConfig parse_scenario_file(const std::string& path) { return parse_scenario(read_json_file(path)); }

json to_json(const ScenarioConfig& c) {
  const auto& g = c.game;
  json game{{"family", g.family},
            {"states", g.states},
            {"dominant", g.dominant},
            {"r", g.r},
            {"lambda", g.lambda},
            {"parameters",
             {{"a", g.a},
              {"b", g.b},
              {"c", g.c},
              {"A_grid", g.A_grid},
              {"table", g.table},
              {"kappa", g.kappa},
              {"beta", g.beta},
              {"cost", g.cost},
              {"intercept", g.intercept},
              {"slope", g.slope}}},
            {"stopping", {{"enabled", g.stopping}, {"W", g.W}}}};
  const auto& p = c.policy;
  json policy{{"kind", p.kind},        {"eta", p.eta},
              {"tol_rule", p.tol_rule}, {"m", p.m},
              {"C", p.C},              {"delta_bar", p.delta_bar},
              {"finite_delta_bar", p.finite_delta_bar}, {"t_delay", p.t_delay}};
  const auto& r = c.run;
  json run{{"mode", r.mode},         {"mu0", r.mu0},         {"A0", r.A0},
           {"N", r.N},               {"N_values", r.N_values}, {"horizon", r.horizon},
           {"trials", r.trials},     {"seed", r.seed},       {"grid_mu", r.grid_mu},
           {"grid_A", r.grid_A},     {"epsilon", r.epsilon}, {"delta", r.delta},
           {"profile", r.profile},   {"detach", r.detach},   {"dp", r.dp},
           {"histories", r.histories},
           {"phi", {{"kind", r.phi.kind}, {"rate", r.phi.rate}, {"time", r.phi.time}}}};
  json output{{"directory", c.output.directory}, {"formats", c.output.formats}};
  return json{{"game", game}, {"policy", policy}, {"run", run}, {"output", output}};
}

GameSpec build_game(const GameBlock& g) {
  require(g.r > 0.0, "game.r", "discount_rate must be positive");
  require(g.lambda > 0.0, "game.lambda", "switch_rate must be positive");
  std::vector<double> states = g.states.empty() ? std::vector<double>{0.0, 1.0} : g.states;
  GameSpec spec;
  try {
    if (g.family == "canonical") {
      require(g.states.empty() || g.states == std::vector<double>{0.0, 1.0}, "game.states",
              "canonical game has states {0, 1}");
      spec = canonical_game();
      spec.r = g.r;
      spec.lambda = g.lambda;
      spec.validate();
    } else if (g.family == "affine") {
      spec = affine_game(states, g.a, g.b, g.c, g.r, g.lambda, g.dominant);
    } else if (g.family == "tabulated") {
      require(!g.states.empty(), "game.states", "tabulated games list their states");
      spec = tabulated_game(states, g.A_grid, g.table, g.r, g.lambda, g.dominant);
    } else {
      throw ConfigError("game.family: '" + g.family + "' has no flow payoff");
    }
  } catch (const DomainError& e) {
    throw ConfigError(std::string("game: ") + e.what());
  }
  return spec;
}

RegimeChangeSpec build_regime(const GameBlock& g) {
  require(g.family == "regime_change", "game.family", "not a regime-change game");
  std::vector<double> states = g.states.empty() ? std::vector<double>{0.0, 1.0} : g.states;
  try {
    if (!g.slope.empty() || !g.intercept.empty())
      return affine_regime(states, g.intercept, g.slope, g.cost, g.r, g.lambda);
    return product_affine_regime(states, g.kappa, g.beta, g.cost, g.r, g.lambda);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("game: ") + e.what());
  }
}

PayoffFunctional build_phi(const PhiBlock& p) {
  if (p.kind == "discounted_mean") {
    require(p.rate > 0.0, "run.phi.rate", "discounted_mean rate must be positive");
    return PayoffFunctional::discounted_mean(p.rate);
  }
  if (p.kind == "terminal_level") {
    require(p.time >= 0.0, "run.phi.time", "terminal_level time must be nonnegative");
    return PayoffFunctional::terminal_level(p.time);
  }
  throw ConfigError("run.phi.kind: unknown functional '" + p.kind + "'");
}

void validate(const ScenarioConfig& cfg) {
  const auto& g = cfg.game;
  const auto& p = cfg.policy;
  const auto& r = cfg.run;
  require(kFamilies.count(g.family) > 0, "game.family", "unknown family '" + g.family + "'");
  const auto& modes = run_modes();
  require(std::find(modes.begin(), modes.end(), r.mode) != modes.end(), "run.mode",
          "unknown mode '" + r.mode + "'");

  std::size_t n_states = 2;
  if (g.family == "regime_change") {
    require(r.mode == "constants" || r.mode == "dominance", "run.mode",
            "regime-change games support the constants and dominance modes");
    require(!g.stopping, "game.stopping", "stopping applies to flow games");
    n_states = build_regime(g).size();
  } else {
    GameSpec spec = build_game(g);
    n_states = spec.size();
    require(!g.stopping || r.A0 == 0.0, "run.A0", "stopping games start from A0 = 0");
    require(!g.stopping || g.W < 0.0 || std::isfinite(g.W), "game.stopping.W", "must be finite");
  }

  policy_kind_from_string(p.kind);
  require(p.eta > 0.0 && p.eta < 1.0, "policy.eta", "must lie in (0,1)");
  require(p.tol_rule == "exact_appendix" || p.tol_rule == "quadratic_maintext", "policy.tol_rule",
          "unknown rule '" + p.tol_rule + "'");
  require(p.tol_rule != "quadratic_maintext" || p.m > 0.0, "policy.m",
          "quadratic_maintext needs m > 0");
  require(p.C < 0.0 || p.C > 0.0, "policy.C", "override must be positive");
  require(p.delta_bar < 0.0 || (p.delta_bar > 0.0 && p.delta_bar <= 1.0), "policy.delta_bar",
          "override must lie in (0,1]");
  require(p.finite_delta_bar > 0.0 && p.finite_delta_bar <= 1.0, "policy.finite_delta_bar",
          "must lie in (0,1]");
  require(p.t_delay >= 0.0, "policy.t_delay", "must be nonnegative");

  require(r.mu0.size() == 1 || r.mu0.size() == n_states, "run.mu0",
          "one number or one weight per state");
  double sum = 0.0;
  for (double x : r.mu0) {
    require(x >= 0.0 && x <= 1.0, "run.mu0", "weights must lie in [0,1]");
    sum += x;
  }
  require(r.mu0.size() == 1 || std::abs(sum - 1.0) <= 1e-9, "run.mu0", "weights must sum to 1");
  require(r.A0 >= 0.0 && r.A0 <= 1.0, "run.A0", "must lie in [0,1]");
  require(r.N >= 1, "run.N", "must be at least 1");
  for (std::size_t n : r.N_values) require(n >= 1, "run.N_values", "entries must be at least 1");
  require(r.horizon > 0.0 && std::isfinite(r.horizon), "run.horizon", "must be finite and positive");
  require(r.trials >= 2, "run.trials", "must be at least 2");
  require(r.mode != "concentration" || r.trials >= 100, "run.trials",
          "concentration needs at least 100 trials");
  require(r.grid_mu >= 2 && r.grid_A >= 2, "run.grid_mu", "grids need at least two points");
  require(r.epsilon > 0.0, "run.epsilon", "must be positive");
  require(r.delta > 0.0, "run.delta", "must be positive");
  require(kProfiles.count(r.profile) > 0, "run.profile", "unknown profile '" + r.profile + "'");
  require(r.histories >= 1, "run.histories", "must be at least 1");
  build_phi(r.phi);
  for (const auto& f : cfg.output.formats)
    require(f == "csv" || f == "json", "output.formats", "unknown format '" + f + "'");
  require(!cfg.output.directory.empty(), "output.directory", "must not be empty");
}

}  // namespace infoputs
