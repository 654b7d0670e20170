#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "epibarrier/barrier.hpp"
#include "epibarrier/io.hpp"
#include "epibarrier/policy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace epibarrier;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitCompute = 3;

struct Common {
  std::string config;
  std::vector<std::string> tol;
};

struct Loaded {
  io::Config cfg;
  std::string digest;
};

double parse_number(const std::string& text, ErrorCode code, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw Error(code, "not a number for " + what + ": '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v)) throw Error(code, "not a number for " + what + ": '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

Loaded load(const Common& c) {
  Loaded l{io::load_config(c.config), {}};
  for (const auto& kv : c.tol) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::RejectTolerances, "expected key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    set_tolerance(l.cfg.tolerances, key, parse_number(kv.substr(eq + 1), ErrorCode::RejectTolerances, key));
  }
  l.cfg.tolerances.validate();
  l.digest = io::sha256_hex(l.cfg.text);
  return l;
}

/// "S,I" or "S,I,E", returned in state order.
StateVec parse_x0(const Scenario& s, const std::string& text, double geom_tol) {
  const auto parts = split(text, ',');
  if (parts.size() != s.dim()) {
    throw Error(ErrorCode::BadState, "x0 needs " + std::to_string(s.dim()) + " components, got '" + text + "'");
  }
  std::vector<double> v;
  for (const auto& p : parts) v.push_back(parse_number(p, ErrorCode::BadState, "x0"));
  if (s.seir()) v = {v[0], v[2], v[1]};
  return make_state(s.variant, v, geom_tol);
}

double set_rate(const Scenario& s, Channel ch, const std::string& text) {
  if (!s.seir() && ch == Channel::Eta) throw Error(ErrorCode::BadChannel, "eta is not a rate of an SIR model");
  const double v = parse_number(text, ErrorCode::BadArgument, std::string(to_string(ch)));
  if (!channel_bounds(s, ch).contains(v, 1e-12)) {
    throw Error(ErrorCode::BadArgument, std::string(to_string(ch)) + " = " + text + " is outside its interval");
  }
  return v;
}

Channel parse_channel(const std::string& name) {
  if (name == "beta") return Channel::Beta;
  if (name == "gamma") return Channel::Gamma;
  if (name == "eta") return Channel::Eta;
  throw Error(ErrorCode::BadChannel, "unknown rate '" + name + "'");
}

struct PolicySpec {
  Policy policy;
  // Switching-law sets, owned here so the policy's pointers stay valid.
  std::unique_ptr<ComputedSet> admissible;
  std::unique_ptr<ComputedSet> mrpi;
};

PolicySpec parse_policy(const Scenario& s, const Tolerances& tol, const std::string& text) {
  PolicySpec out;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  std::vector<std::pair<Channel, std::string>> kv;
  if (!args.empty()) {
    for (const auto& item : split(args, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::BadArgument, "expected rate=value in '" + item + "'");
      kv.emplace_back(parse_channel(item.substr(0, eq)), item.substr(eq + 1));
    }
  }
  if (head == "constant") {
    InputVec u{std::numeric_limits<double>::quiet_NaN(), s.gamma.lo, s.eta.hi};
    for (const auto& [ch, v] : kv) set_channel(u, ch, set_rate(s, ch, v));
    if (std::isnan(u.beta)) throw Error(ErrorCode::BadArgument, "constant policy needs beta=V");
    out.policy = constant_policy(s, u);
  } else if (head == "feedback") {
    if (kv.size() > 1) throw Error(ErrorCode::BadArgument, "feedback takes at most one disturbance value");
    std::optional<double> d;
    if (!kv.empty()) {
      const Channel want = s.seir() ? Channel::Eta : Channel::Gamma;
      if (kv[0].first != want) {
        throw Error(ErrorCode::BadChannel, "feedback disturbance is " + std::string(to_string(want)));
      }
      d = set_rate(s, kv[0].first, kv[0].second);
    }
    out.policy = feedback_policy(s, d);
  } else if (head == "switching") {
    if (!kv.empty()) throw Error(ErrorCode::BadArgument, "switching takes no arguments");
    if (s.variant != ModelVariant::SirPerfect) {
      throw Error(ErrorCode::BadArgument, "the switching law is defined for SIR_PERFECT only");
    }
    out.admissible = std::make_unique<ComputedSet>(assemble_set(s, SetKind::Admissible, tol));
    out.mrpi = std::make_unique<ComputedSet>(assemble_set(s, SetKind::Mrpi, tol));
    out.policy = switching_policy(*out.admissible, *out.mrpi);
  } else {
    throw Error(ErrorCode::BadArgument, "unknown policy '" + text + "'");
  }
  return out;
}

json trajectory_summary(const Trajectory& t) {
  return {{"breached", t.breached},
          {"max_I", t.max_I},
          {"first_breach_time", t.first_breach_time ? json(*t.first_breach_time) : json(nullptr)},
          {"samples", t.samples.size()},
          {"t_end", t.samples.empty() ? 0.0 : t.samples.back().t}};
}

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json manifest(const std::string& command, const Loaded& l, std::optional<std::uint64_t> seed, const Clock& clock) {
  io::Manifest m;
  m.command = command;
  m.scenario_digest = l.digest;
  m.tolerances = l.cfg.tolerances;
  m.seed = seed;
  m.runtime_seconds = clock.seconds();
  return io::to_json(m);
}

std::string indexed(const std::string& stem, std::size_t i, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%03zu", i);
  return stem + buf + ext;
}

void write_json(const fs::path& path, const json& doc) { io::write_file_atomic(path, doc.dump(2) + "\n"); }

int cmd_classify(const Common& c) {
  const Clock clock;
  const Loaded l = load(c);
  const Scenario& s = l.cfg.scenario;
  const Classification cl = classify(s);
  json w = json::array();
  for (const auto& x : cl.witnesses) w.push_back({{"name", x.name}, {"lhs", x.lhs}, {"rhs", x.rhs}});
  json out{{"variant", std::string(to_string(s.variant))},
           {"tag", std::string(to_string(cl.tag))},
           {"witnesses", w},
           {"mrpi_trivial", cl.trivial(SetKind::Mrpi)}};
  out["admissible_trivial"] =
      set_kind_valid(s.variant, SetKind::Admissible) ? json(cl.trivial(SetKind::Admissible)) : json(nullptr);
  out["manifest"] = manifest("classify", l, std::nullopt, clock);
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct BarrierArgs {
  std::string set;
  int curves = 30;
  std::string out;
  std::string format = "csv";
};

int cmd_barrier(const Common& c, const BarrierArgs& a) {
  const Clock clock;
  const Loaded l = load(c);
  const Scenario& s = l.cfg.scenario;
  const SetKind k = parse_set_kind(a.set);
  AssembleOptions opt;
  opt.n_curves = a.curves;
  const ComputedSet set = assemble_set(s, k, l.cfg.tolerances, opt);
  const fs::path dir(a.out);
  std::vector<std::string> files;
  for (std::size_t i = 0; i < set.curves.size(); ++i) {
    const std::string name = indexed("curve", i, a.format == "csv" ? ".csv" : ".json");
    if (a.format == "csv") {
      io::write_file_atomic(dir / name, io::curve_csv(s, set.curves[i]));
    } else {
      write_json(dir / name, io::curve_json(s, set.curves[i]));
    }
    files.push_back(name);
  }
  json doc = io::set_to_json(set, files);
  doc["manifest"] = manifest("barrier", l, std::nullopt, clock);
  write_json(dir / "set.json", doc);
  std::cout << json{{"set_kind", a.set}, {"trivial", set.trivial}, {"curves", files.size()},
                    {"set_json", (dir / "set.json").string()}}
                   .dump()
            << "\n";
  return 0;
}

struct SimulateArgs {
  std::string policy;
  std::string x0;
  double t_end = 500.0;
  std::string out;
};

int cmd_simulate(const Common& c, const SimulateArgs& a) {
  const Clock clock;
  const Loaded l = load(c);
  const Scenario& s = l.cfg.scenario;
  const Tolerances& tol = l.cfg.tolerances;
  const StateVec x0 = parse_x0(s, a.x0, tol.geom_tol);
  const PolicySpec ps = parse_policy(s, tol, a.policy);
  const Trajectory tr = simulate(s, ps.policy, x0, a.t_end, tol);
  const fs::path dir(a.out);
  io::write_file_atomic(dir / "trajectory.csv", io::trajectory_csv(s, tr));
  json summary = trajectory_summary(tr);
  summary["policy"] = ps.policy.describe();
  summary["i_max"] = s.i_max;
  summary["manifest"] = manifest("simulate", l, std::nullopt, clock);
  write_json(dir / "summary.json", summary);
  std::cout << trajectory_summary(tr).dump() << "\n";
  return 0;
}

struct MonteCarloArgs {
  std::string x0;
  int n = 10;
  std::uint64_t seed = 1;
  double t_end = 200.0;
  std::string policy = "feedback";
  std::string out;
};

int cmd_montecarlo(const Common& c, const MonteCarloArgs& a) {
  const Clock clock;
  const Loaded l = load(c);
  const Scenario& s = l.cfg.scenario;
  const Tolerances& tol = l.cfg.tolerances;
  if (!s.imperfect()) throw Error(ErrorCode::BadArgument, "montecarlo needs an imperfect model");
  if (a.n < 0) throw Error(ErrorCode::BadArgument, "--n must be non-negative");
  const StateVec x0 = parse_x0(s, a.x0, tol.geom_tol);
  const PolicySpec ps = parse_policy(s, tol, a.policy);
  const auto runs = monte_carlo(s, x0, ps.policy, a.n, a.seed, a.t_end, tol);
  const fs::path dir(a.out);
  json trials = json::array();
  int n_breached = 0;
  double max_I = 0.0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string name = indexed("trajectory", i, ".csv");
    io::write_file_atomic(dir / name, io::trajectory_csv(s, runs[i]));
    json t = trajectory_summary(runs[i]);
    t["file"] = name;
    t["disturbance"] = monte_carlo_draw(s, a.seed, i);
    trials.push_back(std::move(t));
    n_breached += runs[i].breached ? 1 : 0;
    max_I = std::max(max_I, runs[i].max_I);
  }
  json agg{{"n", runs.size()},
           {"n_breached", n_breached},
           {"max_I", runs.empty() ? json(nullptr) : json(max_I)},
           {"i_max", s.i_max},
           {"policy", ps.policy.describe()},
           {"trials", trials}};
  agg["manifest"] = manifest("montecarlo", l, a.seed, clock);
  write_json(dir / "aggregate.json", agg);
  std::cout << json{{"n", runs.size()}, {"n_breached", n_breached}, {"max_I", agg["max_I"]}}.dump() << "\n";
  return 0;
}

struct OracleArgs {
  std::string set;
  int grid = 0;
  std::string points;
  std::uint64_t seed = 1;
  int trials = 20;
  double t_end = 500.0;
  std::string out;
};

std::vector<StateVec> read_points(const Scenario& s, const std::string& path, double geom_tol) {
  std::vector<StateVec> pts;
  std::istringstream in(io::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
    pts.push_back(parse_x0(s, line, geom_tol));
  }
  return pts;
}

int cmd_oracle(const Common& c, const OracleArgs& a) {
  const Clock clock;
  const Loaded l = load(c);
  const Scenario& s = l.cfg.scenario;
  const Tolerances& tol = l.cfg.tolerances;
  const SetKind k = parse_set_kind(a.set);
  if ((a.grid > 0) == !a.points.empty()) throw Error(ErrorCode::BadArgument, "give exactly one of --grid or --points");
  if (a.grid > 0 && s.seir()) throw Error(ErrorCode::BadArgument, "--grid is 2D; use --points for SEIR");
  if (a.trials < 0) throw Error(ErrorCode::BadArgument, "--trials must be non-negative");

  const ComputedSet set = assemble_set(s, k, tol);
  std::unique_ptr<ComputedSet> other;
  SetPair pair;
  if (k == SetKind::Mrpi) {
    pair.mrpi = &set;
    if (s.variant == ModelVariant::SirPerfect) {
      other = std::make_unique<ComputedSet>(assemble_set(s, SetKind::Admissible, tol));
      pair.admissible = other.get();
    }
  } else {
    pair.admissible = &set;
    if (s.variant == ModelVariant::SirPerfect) {
      other = std::make_unique<ComputedSet>(assemble_set(s, SetKind::Mrpi, tol));
      pair.mrpi = other.get();
    }
  }

  std::vector<GridCell> cells;
  if (a.grid > 0) {
    cells = oracle_grid(s, k, pair, a.grid, a.trials, a.seed, tol, a.t_end);
  } else {
    const auto pts = read_points(s, a.points, tol.geom_tol);
    cells.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cells[i] = {pts[i], membership_oracle(s, k, pair, pts[i], a.trials, trial_rng(a.seed, i)(), tol, a.t_end)};
    }
  }

  std::ostringstream csv;
  csv << (s.seir() ? "S,E,I" : "S,I") << ",verdict,distance,evaluated,oracle_agrees\n";
  int evaluated = 0;
  int agreed = 0;
  double worst_disagreement = 0.0;
  json counterexamples = json::array();
  for (const auto& cell : cells) {
    for (double v : cell.point.components()) csv << io::format_double(v) << ',';
    const auto& r = cell.report;
    csv << to_string(r.claimed.verdict) << ',' << io::format_double(r.claimed.distance_estimate) << ','
        << (r.evaluated ? 1 : 0) << ',' << (r.agree ? 1 : 0) << '\n';
    if (!r.evaluated) continue;
    ++evaluated;
    if (r.agree) {
      ++agreed;
    } else {
      worst_disagreement = std::max(worst_disagreement, r.claimed.distance_estimate);
      json p = json::array();
      for (double v : cell.point.components()) p.push_back(v);
      json ce{{"point", p}, {"claimed", std::string(to_string(r.claimed.verdict))}};
      if (r.counterexample) {
        ce["policy"] = r.counterexample->policy;
        ce["seed"] = r.counterexample->seed;
        ce["trial"] = r.counterexample->trial;
        ce["first_breach_time"] = r.counterexample->trajectory.first_breach_time
                                      ? json(*r.counterexample->trajectory.first_breach_time)
                                      : json(nullptr);
      }
      counterexamples.push_back(std::move(ce));
    }
  }
  const fs::path dir(a.out);
  io::write_file_atomic(dir / "oracle.csv", csv.str());
  const double rate = evaluated == 0 ? 1.0 : static_cast<double>(agreed) / evaluated;
  json summary{{"set_kind", a.set},
               {"trivial", set.trivial},
               {"points", cells.size()},
               {"evaluated", evaluated},
               {"agreed", agreed},
               {"agreement_rate", rate},
               {"max_disagreement_distance", worst_disagreement},
               {"disagreements", counterexamples}};
  summary["manifest"] = manifest("oracle", l, a.seed, clock);
  write_json(dir / "summary.json", summary);
  std::cout << json{{"evaluated", evaluated}, {"agreement_rate", rate}}.dump() << "\n";
  return 0;
}

bool is_input_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::RejectBounds:
    case ErrorCode::RejectCap:
    case ErrorCode::RejectFields:
    case ErrorCode::RejectTolerances:
    case ErrorCode::BadState:
    case ErrorCode::BadArgument:
    case ErrorCode::Domain:
    case ErrorCode::BadChannel:
    case ErrorCode::BadSetKind:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Admissible and robust invariant sets for SIR/SEIR models with an infection cap"};
  app.set_version_flag("--version", std::string(io::kVersion));
  app.require_subcommand(1);

  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--config", common.config, "scenario JSON file")->required();
    sub->add_option("--tol", common.tol, "tolerance override key=value (repeatable)");
  };
  const std::vector<std::string> kinds{"admissible", "mrpi"};

  auto* classify_cmd = app.add_subcommand("classify", "classify the scenario; JSON report on stdout");
  add_common(classify_cmd);

  BarrierArgs barrier;
  auto* barrier_cmd = app.add_subcommand("barrier", "compute barrier curves and set.json");
  add_common(barrier_cmd);
  barrier_cmd->add_option("--set", barrier.set)->required()->check(CLI::IsMember(kinds));
  barrier_cmd->add_option("--curves", barrier.curves, "curves for SEIR sets")->check(CLI::Range(1, 100000));
  barrier_cmd->add_option("--out", barrier.out, "output directory")->required();
  barrier_cmd->add_option("--format", barrier.format)->check(CLI::IsMember({"csv", "json"}));

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "forward simulation under a policy");
  add_common(sim_cmd);
  sim_cmd->add_option("--policy", sim.policy, "constant:beta=V[,gamma=V][,eta=V] | feedback[:gamma=V|eta=V] | switching")
      ->required();
  sim_cmd->add_option("--x0", sim.x0, "S,I[,E]")->required();
  sim_cmd->add_option("--t-end", sim.t_end, "days");
  sim_cmd->add_option("--out", sim.out, "output directory")->required();

  MonteCarloArgs mc;
  auto* mc_cmd = app.add_subcommand("montecarlo", "seeded sweep over the uncertain rate");
  add_common(mc_cmd);
  mc_cmd->add_option("--x0", mc.x0, "S,I[,E]")->required();
  mc_cmd->add_option("--n", mc.n, "trials");
  mc_cmd->add_option("--seed", mc.seed);
  mc_cmd->add_option("--t-end", mc.t_end, "days");
  mc_cmd->add_option("--policy", mc.policy, "constant:… | feedback");
  mc_cmd->add_option("--out", mc.out, "output directory")->required();

  OracleArgs oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "check membership verdicts by simulation");
  add_common(oracle_cmd);
  oracle_cmd->add_option("--set", oracle.set)->required()->check(CLI::IsMember(kinds));
  oracle_cmd->add_option("--grid", oracle.grid, "n×n grid (SIR)")->check(CLI::Range(1, 10000));
  oracle_cmd->add_option("--points", oracle.points, "file with one S,I[,E] point per line");
  oracle_cmd->add_option("--seed", oracle.seed);
  oracle_cmd->add_option("--trials", oracle.trials, "bang-bang trials per point");
  oracle_cmd->add_option("--t-end", oracle.t_end, "days");
  oracle_cmd->add_option("--out", oracle.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*classify_cmd) return cmd_classify(common);
    if (*barrier_cmd) return cmd_barrier(common, barrier);
    if (*sim_cmd) return cmd_simulate(common, sim);
    if (*mc_cmd) return cmd_montecarlo(common, mc);
    if (*oracle_cmd) return cmd_oracle(common, oracle);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_input_error(e.code()) ? kExitInput : kExitCompute;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: IO: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCompute;
  }
  return kExitInput;
}
