#include "infoputs/run.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "infoputs/applications.hpp"
#include "infoputs/contagion.hpp"
#include "infoputs/format.hpp"

#ifndef PUTS_VERSION
#define PUTS_VERSION "0.0.0"
#endif

namespace infoputs {

namespace fs = std::filesystem;
using nlohmann::json;

const char* software_version() { return PUTS_VERSION; }

std::vector<std::string> emit_plot_data(const std::vector<PlotSeries>& series, const std::string& dir) {
  if (series.empty()) throw DomainError("no series to emit");
  for (const auto& s : series) {
    if (s.rows.empty()) throw DomainError("series '" + s.name + "' is empty");
    if (s.name.empty()) throw DomainError("series needs a name");
  }
  fs::create_directories(dir);
  std::vector<std::string> files;
  json index = json::array();
  for (const auto& s : series) {
    const std::string file = s.name + ".csv";
    std::ofstream out(fs::path(dir) / file);
    if (!out) throw ConfigError("cannot write " + (fs::path(dir) / file).string());
    out << s.x_label << ',' << s.y_label << '\n';
    for (const auto& [x, y] : s.rows) out << num(x) << ',' << num(y) << '\n';
    files.push_back(file);
    index.push_back({{"name", s.name}, {"file", file}, {"x", s.x_label}, {"y", s.y_label},
                     {"rows", s.rows.size()}});
  }
  std::ofstream idx(fs::path(dir) / "index.json");
  if (!idx) throw ConfigError("cannot write index.json in " + dir);
  idx << json{{"series", index}}.dump(2) << '\n';
  files.push_back("index.json");
  return files;
}

PlotSeries belief_staircase(const Trajectory& tj, std::size_t dominant) {
  PlotSeries s{"belief", "t", "mu", {}};
  for (const auto& e : tj.events) {
    double m = e.mu[dominant];
    if (s.rows.empty()) {
      s.rows.emplace_back(e.t, m);
      continue;
    }
    double prev = s.rows.back().second;
    if (prev == m) continue;
    if (s.rows.back().first < e.t) s.rows.emplace_back(e.t, prev);
    s.rows.emplace_back(e.t, m);
  }
  if (!tj.events.empty() && s.rows.back().first < tj.events.back().t)
    s.rows.emplace_back(tj.events.back().t, s.rows.back().second);
  return s;
}

PlotSeries aggregate_series(const Trajectory& tj, double dt) {
  if (!(dt > 0.0)) throw DomainError("sampling step must be positive");
  PlotSeries s{"aggregate", "t", "A", {}};
  const auto n = static_cast<std::size_t>(std::ceil(tj.horizon / dt));
  for (std::size_t i = 0; i <= n; ++i) {
    double t = std::min(tj.horizon, static_cast<double>(i) * dt);
    s.rows.emplace_back(t, tj.path.at(t));
  }
  return s;
}

std::vector<PlotSeries> dominance_series(const DominanceModel& model, std::size_t n) {
  if (n < 2) throw DomainError("need at least two points");
  PlotSeries lo{"psi_ld", "A", "psi_ld", {}}, hi{"psi_ud", "A", "psi_ud", {}};
  for (std::size_t i = 0; i < n; ++i) {
    double A = static_cast<double>(i) / static_cast<double>(n - 1);
    lo.rows.emplace_back(A, model.psi_ld(A));
    hi.rows.emplace_back(A, model.psi_ud(A));
  }
  return {lo, hi};
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 unavailable");
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

namespace {

std::string timestamp(const char* fmt) {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, fmt);
  return s.str();
}

struct Context {
  const ScenarioConfig& cfg;
  std::string dir;
  RunManifest& man;
  std::shared_ptr<const DominanceModel> model;
  GameConstants k;
  PolicyParams params;

  std::string path(const std::string& name) const { return (fs::path(dir) / name).string(); }
  void add(const std::string& name) { man.files.push_back({name, ""}); }
  bool csv() const { return cfg.output.wants("csv"); }
  bool jsn() const { return cfg.output.wants("json"); }

  void write_json(const std::string& name, const json& j) {
    if (!jsn()) return;
    std::ofstream out(path(name));
    if (!out) throw ConfigError("cannot write " + path(name));
    out << j.dump(2) << '\n';
    add(name);
  }

  void plots(const std::vector<PlotSeries>& s) {
    if (!csv()) return;
    for (const auto& f : emit_plot_data(s, path("plots"))) add("plots/" + f);
  }

  Belief mu0() const {
    const auto& w = cfg.run.mu0;
    if (w.size() == 1) {
      if (!model->binary()) throw ConfigError("run.mu0: multi-state games need one weight per state");
      return model->belief(w[0]);
    }
    return Belief(w);
  }

  std::unique_ptr<Policy> policy(bool finite = false) const {
    PolicyParams p = params;
    p.finite_mode = finite;
    return make_alternative_policy(policy_kind_from_string(cfg.policy.kind), model, p,
                                   cfg.policy.t_delay);
  }

  AgentProfile profile() const {
    const auto& name = cfg.run.profile;
    if (name == "until_certified") return until_certified(model, cfg.run.epsilon);
    if (name == "until_upper_dominance") return until_upper_dominance(model);
    return AgentProfile::compliant();
  }
};

GameConstants resolve_constants(const ScenarioConfig& cfg, const GameSpec& spec) {
  GameConstants k = game_constants(spec);
  if (cfg.policy.C > 0.0 || cfg.policy.delta_bar > 0.0)
    k = with_overrides(k, cfg.policy.C > 0.0 ? cfg.policy.C : -1.0,
                       cfg.policy.delta_bar > 0.0 ? cfg.policy.delta_bar : -1.0);
  return k;
}

json constants_json(const GameConstants& k) {
  return json{{"L", k.L},       {"l", k.l},         {"L_psi", k.L_psi}, {"C", k.C},
              {"c_aux", k.c_aux}, {"e_hi", k.e_hi}, {"e_lo", k.e_lo},   {"delta_bar", k.delta_bar},
              {"M", k.M},       {"Delta_bar", k.Delta_bar}, {"lambda", k.lambda}, {"r", k.r}};
}

void run_regime(Context& c) {
  RegimeChangeSpec spec = build_regime(c.cfg.game);
  const auto& r = c.cfg.run;
  if (r.mode == "constants") {
    RegimeLipschitz L = regime_lipschitz_check(spec, r.trials, r.seed);
    APath zero = APath::from_spec(PathSpec{0.0, PathSpec::Regime::all_down, {}, {}}, spec.lambda);
    json j{{"L_gamma", L.L_gamma},
           {"gamma_max", L.gamma_max},
           {"L_star", L.L_star},
           {"L_star_full", L.L_star_full},
           {"max_ratio", L.max_ratio},
           {"pairs", L.pairs},
           {"monotone_pairs", L.monotone_pairs},
           {"monotone_violations", L.monotone_violations},
           {"dominant_state_value", regime_delta_expected(spec, spec.size() - 1, zero)}};
    c.write_json("constants.json", j);
    c.man.summary = j;
    return;
  }
  // dominance
  PlotSeries lo{"psi_ld", "A", "psi_ld", {}};
  for (std::size_t i = 0; i < r.grid_A; ++i) {
    double A = static_cast<double>(i) / static_cast<double>(r.grid_A - 1);
    lo.rows.emplace_back(A, regime_psi_ld(spec, A));
  }
  if (c.csv()) {
    std::ofstream out(c.path("dominance.csv"));
    out << "A,psi_ld\n";
    for (const auto& [A, v] : lo.rows) out << num(A) << ',' << num(v) << '\n';
    c.add("dominance.csv");
  }
  c.plots({lo});
  c.man.summary = {{"psi_ld_at_0", lo.rows.front().second}, {"points", lo.rows.size()}};
}

void run_certify(Context& c) {
  const auto& r = c.cfg.run;
  const GridSpec grid{r.grid_mu, r.grid_A};
  const PolicyKind kind = policy_kind_from_string(c.cfg.policy.kind);
  Certificate cert = certify_full_implementation(*c.model, c.params, kind, grid, r.epsilon);
  c.write_json("certificate.json", cert.to_json());
  if (c.csv()) {
    cert.write_region_csv(c.path("region.csv"));
    c.add("region.csv");
  }
  c.man.summary = {{"certified", cert.certified},
                   {"min_margin", cert.min_margin},
                   {"min_step_margin", cert.min_step_margin},
                   {"cells_checked", cert.cells_checked},
                   {"failures", cert.failures},
                   {"rounds", cert.sequence.radii.size()}};
  if (r.dp) {
    RegionMap dp = dp_oracle(*c.model, c.params, kind, grid);
    if (c.csv()) {
      dp.write_csv(c.path("dp_region.csv"));
      c.add("dp_region.csv");
    }
    std::size_t one = 0, zero = 0, open = 0;
    for (auto s : dp.cells) {
      one += s == CellStatus::certified_one;
      zero += s == CellStatus::certified_zero;
      open += s == CellStatus::undetermined;
    }
    c.man.summary["dp"] = {{"certified_one", one}, {"certified_zero", zero}, {"undetermined", open},
                           {"rounds", dp.rounds}, {"tail_bound", dp.tail_bound}};
  }
  if (!cert.certified) c.man.exit_code = 2;
}

void run_simulate(Context& c, bool finite) {
  const auto& r = c.cfg.run;
  auto pol = c.policy(finite);
  SimOptions opt;
  opt.epsilon = r.epsilon;
  opt.detach_when_belief_free = finite && r.detach;
  Trajectory tj = finite ? simulate_finite(*pol, r.N, c.mu0(), r.A0, c.profile(), r.horizon, r.seed, opt)
                         : simulate_continuum(*pol, c.mu0(), r.A0, c.profile(), r.horizon, r.seed, opt);
  if (c.csv()) {
    tj.write_csv(c.path("trajectory.csv"));
    c.add("trajectory.csv");
  }
  c.plots({belief_staircase(tj, c.model->dominant()), aggregate_series(tj, r.horizon / 1000)});
  PayoffFunctional phi = build_phi(r.phi);
  c.man.summary = {{"events", tj.events.size()},
                   {"injections", tj.injections},
                   {"jumps", tj.jumps},
                   {"phi", evaluate_functional(phi, tj.path)},
                   {"A_end", tj.path.at(r.horizon)}};
  if (finite) {
    MultiplicityGap g = estimate_multiplicity_gap(*pol, r.N, c.mu0(), r.A0, phi, r.trials, r.seed,
                                                  r.horizon, r.epsilon);
    json gap{{"N", g.N},         {"opt", g.opt},       {"adv", g.adv},
             {"gap", g.gap},     {"se_opt", g.se_opt}, {"se_adv", g.se_adv},
             {"se_gap", g.se_gap}, {"trials", g.trials}};
    c.man.summary["multiplicity_gap"] = gap;
    c.write_json("multiplicity_gap.json", gap);
  }
}

void run_concentration(Context& c) {
  const auto& r = c.cfg.run;
  std::vector<std::size_t> Ns = r.N_values.empty() ? std::vector<std::size_t>{r.N} : r.N_values;
  std::vector<ConcentrationResult> res;
  for (std::size_t N : Ns)
    res.push_back(concentration_experiment(c.model->game().lambda, r.A0, N, r.delta, r.trials, r.seed));
  if (c.csv()) {
    std::ofstream out(c.path("concentration.csv"));
    out << "N,delta,trials,tail_probability,analytic_bound,median_sup,mean_sup\n";
    for (const auto& x : res)
      out << x.N << ',' << num(x.delta) << ',' << x.trials << ',' << num(x.tail_probability) << ','
          << num(x.analytic_bound) << ',' << num(x.median_sup) << ',' << num(x.mean_sup) << '\n';
    c.add("concentration.csv");
  }
  PlotSeries med{"median_sup", "N", "median_sup", {}};
  for (const auto& x : res) med.rows.emplace_back(static_cast<double>(x.N), x.median_sup);
  c.plots({med});
  json rows = json::array();
  for (const auto& x : res)
    rows.push_back({{"N", x.N}, {"tail_probability", x.tail_probability},
                    {"analytic_bound", x.analytic_bound}, {"median_sup", x.median_sup}});
  c.man.summary = {{"results", rows}};
  if (res.size() >= 2) {
    // least-squares slope of log median against log N
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = static_cast<double>(res.size());
    for (const auto& x : res) {
      double lx = std::log(static_cast<double>(x.N)), ly = std::log(x.median_sup);
      sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    c.man.summary["median_slope"] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  c.write_json("concentration.json", c.man.summary);
}

void run_audit(Context& c) {
  const auto& r = c.cfg.run;
  auto pol = c.policy();
  AuditOptions opt;
  opt.histories = r.histories;
  opt.seed = r.seed;
  AuditReport rep = sequential_optimality_audit(*pol, build_phi(r.phi), opt);
  if (c.csv()) {
    std::ofstream out(c.path("audit.csv"));
    out << "kind,mu,A,Z,action,sup,value,gap,bound\n";
    for (const auto& e : rep.entries)
      out << to_string(e.kind) << ',' << num(e.mu) << ',' << num(e.A) << ',' << num(e.Z) << ','
          << to_string(e.action) << ',' << num(e.sup) << ',' << num(e.value) << ',' << num(e.gap)
          << ',' << num(e.bound) << '\n';
    c.add("audit.csv");
  }
  c.man.summary = {{"passed", rep.passed},
                   {"histories", rep.entries.size()},
                   {"failures", rep.failures},
                   {"max_gap_outside", rep.max_gap_outside},
                   {"max_gap_inside", rep.max_gap_inside},
                   {"worst", {{"kind", to_string(rep.worst.kind)}, {"mu", rep.worst.mu},
                              {"A", rep.worst.A}, {"gap", rep.worst.gap}}}};
  c.write_json("audit.json", c.man.summary);
  if (!rep.passed) c.man.exit_code = 2;
}

void run_constants(Context& c) {
  json j = constants_json(c.k);
  j["W"] = c.params.W;
  try {
    FiniteThreshold f = finite_threshold(c.k, c.cfg.run.N, c.cfg.policy.finite_delta_bar);
    j["finite"] = {{"N", f.N}, {"delta_bar", f.delta_bar}, {"delta_bar_cap", f.delta_bar_cap},
                   {"G", f.G}, {"offset", f.offset}};
  } catch (const DomainError& e) {
    j["finite"] = {{"error", e.what()}};
  }
  c.write_json("constants.json", j);
  c.man.summary = j;
}

void run_dominance(Context& c) {
  const auto& r = c.cfg.run;
  auto series = dominance_series(*c.model, r.grid_A);
  if (c.csv()) {
    std::ofstream out(c.path("dominance.csv"));
    out << "A,psi_ld,psi_ud\n";
    for (std::size_t i = 0; i < series[0].rows.size(); ++i)
      out << num(series[0].rows[i].first) << ',' << num(series[0].rows[i].second) << ','
          << num(series[1].rows[i].second) << '\n';
    c.add("dominance.csv");
  }
  c.plots(series);
  c.man.summary = {{"psi_ld_at_0", series[0].rows.front().second},
                   {"psi_ud_at_0", series[1].rows.front().second},
                   {"initial_radius", initial_radius(*c.model)}};
}

void run_private_bound(Context& c) {
  const auto& r = c.cfg.run;
  PrivateInfoBound b = private_info_bound(*c.model, c.mu0(), r.A0, build_phi(r.phi));
  json j{{"bound", b.bound}, {"p_star_A0", b.p_star_A0}, {"p_star_one", b.p_star_one}};
  c.write_json("private_bound.json", j);
  c.man.summary = j;
}

}  // namespace

std::string unique_run_directory(const std::string& base, const std::string& mode, std::uint64_t seed) {
  fs::create_directories(base);
  const std::string stem = mode + "-s" + std::to_string(seed) + "-" + timestamp("%Y%m%dT%H%M%S");
  for (int k = 1;; ++k) {
    fs::path p = fs::path(base) / (k == 1 ? stem : stem + "-" + std::to_string(k));
    if (fs::create_directory(p)) return p.string();
  }
}

json RunManifest::to_json() const {
  json f = json::array();
  for (const auto& x : files) f.push_back({{"name", x.name}, {"sha256", x.sha256}});
  return json{{"config", config},       {"version", version},  {"seed", seed},
              {"started", started},     {"wall_clock_seconds", wall_clock},
              {"directory", directory}, {"files", f},          {"summary", summary},
              {"exit_code", exit_code}};
}

RunManifest run(const ScenarioConfig& cfg) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest man;
  man.config = to_json(cfg);
  man.version = software_version();
  man.seed = cfg.run.seed;
  man.started = timestamp("%Y-%m-%dT%H:%M:%SZ");
  man.directory = unique_run_directory(cfg.output.directory, cfg.run.mode, cfg.run.seed);
  Context c{cfg, man.directory, man, nullptr, {}, {}};

  const std::string& mode = cfg.run.mode;
  if (cfg.game.family == "regime_change") {
    run_regime(c);
  } else {
    GameSpec spec = build_game(cfg.game);
    c.k = resolve_constants(cfg, spec);
    if (cfg.game.stopping) {
      StoppingSpec st{spec, true, cfg.game.W};
      StoppingSetup s = stopping_adapter(st, cfg.run.A0, c.k, cfg.policy.eta);
      c.model = s.model;
      c.params = s.params;
    } else {
      c.model = std::make_shared<const DominanceModel>(spec);
      c.params = make_params(c.k, cfg.policy.eta);
    }
    c.params.tol_rule = cfg.policy.tol_rule == "quadratic_maintext" ? TolRule::quadratic_maintext
                                                                    : TolRule::exact_appendix;
    c.params.m = cfg.policy.m;
    c.params.finite_delta_bar = cfg.policy.finite_delta_bar;
    c.params.validate();

    if (mode == "certify") run_certify(c);
    else if (mode == "simulate") run_simulate(c, false);
    else if (mode == "finite") run_simulate(c, true);
    else if (mode == "concentration") run_concentration(c);
    else if (mode == "audit") run_audit(c);
    else if (mode == "constants") run_constants(c);
    else if (mode == "dominance") run_dominance(c);
    else run_private_bound(c);
  }

  for (auto& f : man.files) f.sha256 = sha256_file(c.path(f.name));
  man.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream out(c.path("manifest.json"));
  if (!out) throw ConfigError("cannot write manifest in " + man.directory);
  out << man.to_json().dump(2) << '\n';
  return man;
}

}  // namespace infoputs
