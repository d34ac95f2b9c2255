#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "infoputs/run.hpp"

using namespace infoputs;
using doctest::Approx;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("puts_cli_" + name);
  fs::remove_all(p);
  return p;
}

json g1_config(const std::string& mode, const fs::path& out) {
  return json{{"game", {{"family", "canonical"}}},
              {"policy", {{"C", 2.0 / 3}, {"delta_bar", 1.0}}},
              {"run", {{"mode", mode}, {"mu0", 0.4}, {"A0", 0.2}, {"horizon", 5.0},
                       {"grid_mu", 40}, {"grid_A", 41}, {"epsilon", 0.01},
                       {"profile", "until_upper_dominance"}, {"seed", 11}}},
              {"output", {{"directory", out.string()}}}};
}

std::string error_of(const json& j) {
  try {
    parse_scenario(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config takes defaults") {
  ScenarioConfig c = parse_scenario(json{{"game", {{"family", "canonical"}}}});
  CHECK(c.game.r == 1.0);
  CHECK(c.game.lambda == 1.0);
  CHECK(c.policy.kind == "puts");
  CHECK(c.policy.eta == 0.01);
  CHECK(c.policy.tol_rule == "exact_appendix");
  CHECK(c.run.mode == "certify");
  CHECK(c.run.mu0 == std::vector<double>{0.5});
  CHECK(c.output.wants("csv"));
  CHECK(c.output.wants("json"));
  GameSpec g = build_game(c.game);
  CHECK(g.size() == 2);
}

TEST_CASE("config errors name the offending key") {
  std::string e = error_of(json{{"game", {{"family", "canonical"}, {"lambda", -1}}}});
  CHECK(e.find("game.lambda") != std::string::npos);
  CHECK(e.find("switch_rate must be positive") != std::string::npos);

  e = error_of(json{{"game", {{"family", "canonical"}}}, {"run", {{"horizn", 3}}}});
  CHECK(e == "run.horizn: unknown key");

  e = error_of(json{{"game", {{"family", "canonical"}}}, {"run", {{"N", "many"}}}});
  CHECK(e.find("run.N") != std::string::npos);

  e = error_of(json{{"game", {{"family", "canonical"}}}, {"policy", {{"eta", 1.5}}}});
  CHECK(e.find("policy.eta") != std::string::npos);

  e = error_of(json{{"game", {{"family", "canonical"}}}, {"run", {{"mode", "bogus"}}}});
  CHECK(e.find("run.mode") != std::string::npos);

  CHECK(error_of(json{{"policy", json::object()}}).find("game") != std::string::npos);
  CHECK(!error_of(json{{"game", {{"family", "regime_change"}}}, {"run", {{"mode", "simulate"}}}}).empty());
}

TEST_CASE("config survives a JSON round trip") {
  ScenarioConfig c = parse_scenario(g1_config("simulate", "x"));
  c.run.N_values = {100, 1000};
  c.run.phi.kind = "terminal_level";
  c.run.phi.time = 3.0;
  c.output.formats = {"csv"};
  CHECK(parse_scenario(to_json(c)) == c);
  ScenarioConfig r = parse_scenario(json{{"game", {{"family", "regime_change"}}}, {"run", {{"mode", "constants"}}}});
  CHECK(parse_scenario(to_json(r)) == r);
}

TEST_CASE("sha256 of a known input") {
  fs::path d = scratch("sha");
  fs::create_directories(d);
  std::ofstream(d / "abc") << "abc";
  CHECK(sha256_file((d / "abc").string()) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK_THROWS_AS(sha256_file((d / "missing").string()), ConfigError);
}

TEST_CASE("constants and dominance outputs for the canonical game") {
  fs::path out = scratch("constants");
  RunManifest m = run(parse_scenario(g1_config("constants", out)));
  json k = json::parse(slurp(fs::path(m.directory) / "constants.json"));
  CHECK(k["L"].get<double>() == Approx(1.0 / 3).epsilon(1e-9));
  CHECK(k["l"].get<double>() == Approx(1.0).epsilon(1e-9));
  CHECK(k["M"].get<double>() == Approx(2.0 / 3).epsilon(1e-9));
  CHECK(k["Delta_bar"].get<double>() == Approx(2.0));
  CHECK(k["finite"]["G"].get<double>() == Approx(1.2e-10).epsilon(0.01));

  json d = g1_config("dominance", out);
  d["run"]["grid_A"] = 4;
  m = run(parse_scenario(d));
  std::istringstream csv(slurp(fs::path(m.directory) / "dominance.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "A,psi_ld,psi_ud");
  std::getline(csv, line);
  CHECK(line == "0,0.333333333,0.5");
  int rows = 1;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 4);
  CHECK(fs::exists(fs::path(m.directory) / "plots" / "psi_ld.csv"));
}

TEST_CASE("regime-change constants") {
  fs::path out = scratch("regime");
  json j{{"game", {{"family", "regime_change"}}},
         {"run", {{"mode", "constants"}, {"trials", 50}}},
         {"output", {{"directory", out.string()}}}};
  RunManifest m = run(parse_scenario(j));
  CHECK(m.summary["L_gamma"].get<double>() == Approx(0.75));
  CHECK(m.summary["L_star"].get<double>() == Approx(1.3125));
  CHECK(m.summary["monotone_violations"].get<int>() == 0);
}

TEST_CASE("simulate is deterministic and the manifest checks out") {
  fs::path out = scratch("simulate");
  ScenarioConfig c = parse_scenario(g1_config("simulate", out));
  RunManifest a = run(c);
  RunManifest b = run(c);
  CHECK(a.directory != b.directory);
  std::string ta = slurp(fs::path(a.directory) / "trajectory.csv");
  CHECK(ta.rfind("t,mu,A,Z,event\n", 0) == 0);
  CHECK(ta == slurp(fs::path(b.directory) / "trajectory.csv"));
  CHECK(a.summary["injections"].get<int>() > 0);

  json man = json::parse(slurp(fs::path(a.directory) / "manifest.json"));
  CHECK(man["seed"] == 11);
  CHECK(man["version"] == software_version());
  CHECK(parse_scenario(man["config"]) == c);
  REQUIRE(man["files"].size() >= 3);
  for (const auto& f : man["files"])
    CHECK(f["sha256"] == sha256_file((fs::path(a.directory) / f["name"].get<std::string>()).string()));

  c.run.seed = 12;
  RunManifest other = run(c);
  CHECK(json::parse(slurp(fs::path(other.directory) / "manifest.json"))["seed"] == 12);
}

TEST_CASE("certify writes a certificate") {
  fs::path out = scratch("certify");
  RunManifest m = run(parse_scenario(g1_config("certify", out)));
  CHECK(m.exit_code == 0);
  json cert = json::parse(slurp(fs::path(m.directory) / "certificate.json"));
  CHECK(cert["certified"] == true);
  CHECK(fs::exists(fs::path(m.directory) / "region.csv"));
}

TEST_CASE("plot data") {
  auto model = std::make_shared<const DominanceModel>(canonical_game());
  auto pol = make_puts_policy(model, make_params(game_constants(canonical_game())));
  AgentProfile adv = until_certified(model, 1e-3);
  Trajectory tj;
  for (std::uint64_t s = 0;; ++s) {
    tj = simulate_continuum(*pol, Belief::binary(0.1), 0.0, adv, 2.0, s);
    if (tj.events[1].kind == EventKind::jump && tj.events[1].mu[1] > 0.0) break;
  }
  PlotSeries st = belief_staircase(tj, 1);
  int pairs = 0;
  for (std::size_t i = 1; i < st.rows.size(); ++i)
    if (st.rows[i].first == st.rows[i - 1].first && st.rows[i].second != st.rows[i - 1].second) ++pairs;
  CHECK(pairs == 1);
  CHECK(st.rows.front() == std::pair<double, double>{0.0, 0.1});
  CHECK(st.rows[1].second == Approx(0.3448276).epsilon(1e-7));
  CHECK(st.rows.back().first == Approx(2.0));

  PlotSeries ag = aggregate_series(tj, 0.5);
  CHECK(ag.rows.size() == 5);
  CHECK(ag.rows[2].second == Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));

  fs::path d = scratch("plots");
  auto files = emit_plot_data({st, ag}, d.string());
  CHECK(files == std::vector<std::string>{"belief.csv", "aggregate.csv", "index.json"});
  CHECK(slurp(d / "belief.csv").rfind("t,mu\n0,0.1\n0,0.344827586\n", 0) == 0);
  json idx = json::parse(slurp(d / "index.json"));
  CHECK(idx["series"].size() == 2);

  CHECK_THROWS_AS(emit_plot_data({PlotSeries{"empty", "x", "y", {}}}, d.string()), DomainError);
  CHECK_THROWS_AS(emit_plot_data({}, d.string()), DomainError);
}
