#include <doctest.h>

#include <filesystem>
#include <random>

#include "epibarrier/io.hpp"
#include "support.hpp"

using namespace epibarrier;
using testing::error_of;
namespace fs = std::filesystem;

namespace {

StateVec random_probe(std::mt19937_64& rng, const Scenario& s) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (true) {
    const double S = u(rng), I = u(rng) * s.i_max;
    if (!s.seir()) {
      if (S + I <= 1.0) return StateVec::sir(S, I);
    } else {
      const double E = u(rng) * 0.5;
      if (S + E + I <= 1.0) return StateVec::seir(S, E, I);
    }
  }
}

void check_round_trip(const Scenario& s, SetKind k, std::uint64_t seed) {
  const ComputedSet set = assemble_set(s, k, Tolerances{});
  const std::string text = io::set_to_json(set, {}).dump(2);
  const ComputedSet back = io::set_from_json(nlohmann::json::parse(text));
  CHECK(back.kind == set.kind);
  CHECK(back.trivial == set.trivial);
  CHECK(back.classification.tag == set.classification.tag);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < 100; ++i) {
    const StateVec x = random_probe(rng, s);
    const Membership a = membership(set, x);
    const Membership b = membership(back, x);
    CHECK(a.verdict == b.verdict);
    CHECK(a.distance_estimate == b.distance_estimate);
  }
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("epibarrier_io_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("set.json round trip keeps membership verdicts") {
  check_round_trip(testing::sir_perfect(0.02), SetKind::Admissible, 1);
  check_round_trip(testing::sir_perfect(0.02), SetKind::Mrpi, 2);
  check_round_trip(testing::sir_imperfect(), SetKind::Mrpi, 3);
  check_round_trip(testing::sir_perfect(0.4), SetKind::Mrpi, 4);
  check_round_trip(testing::seir_perfect(0.3), SetKind::Mrpi, 5);
  check_round_trip(testing::seir_imperfect(), SetKind::Mrpi, 6);
}

TEST_CASE("set.json contents") {
  const ComputedSet set = assemble_set(testing::sir_perfect(0.02), SetKind::Admissible, Tolerances{});
  const nlohmann::json doc = io::set_to_json(set, {"curve_000.csv"});
  CHECK(doc["set_kind"] == "admissible");
  CHECK(doc["classification"]["tag"] == "BOTH_PROPER");
  CHECK(doc["tangent_set"]["point"][0].get<double>() == doctest::Approx(0.5 / 0.6).epsilon(1e-12));
  CHECK(doc["tangent_set"]["point"][1].get<double>() == 0.02);
  CHECK(doc["curves"].size() == 1);
  CHECK(doc["curves"][0]["file"] == "curve_000.csv");
  CHECK(doc["boundary"]["vertices"].size() == doc["boundary"]["edge_tags"].size());

  CHECK(error_of([] { io::set_from_json(nlohmann::json::object()); }) == ErrorCode::RejectFields);
  nlohmann::json bad = doc;
  bad["set_kind"] = 3;
  CHECK(error_of([&] { io::set_from_json(bad); }) == ErrorCode::RejectFields);
}

TEST_CASE("CSV output is deterministic and full precision") {
  const Scenario s = testing::sir_perfect(0.02);
  const ComputedSet a = assemble_set(s, SetKind::Mrpi, Tolerances{});
  const ComputedSet b = assemble_set(s, SetKind::Mrpi, Tolerances{});
  const std::string ca = io::curve_csv(s, a.curves.front());
  CHECK(ca == io::curve_csv(s, b.curves.front()));
  CHECK(ca.rfind("t,S,I,lambda1,lambda2,beta,switch_flag\n", 0) == 0);
  CHECK(ca.find('\r') == std::string::npos);
  CHECK(io::format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);

  const Scenario e = testing::seir_imperfect();
  const ComputedSet m = assemble_set(e, SetKind::Mrpi, Tolerances{});
  const std::string ce = io::curve_csv(e, m.curves.front());
  CHECK(ce.rfind("t,S,E,I,lambda1,lambda2,lambda3,beta,gamma,eta,switch_flag\n", 0) == 0);

  const Trajectory tr = simulate(s, feedback_policy(s), StateVec::sir(0.8, 0.01), 1.0, Tolerances{});
  const std::string tc = io::trajectory_csv(s, tr);
  CHECK(tc.rfind("t,S,I,R,beta\n", 0) == 0);
  CHECK(tc == io::trajectory_csv(s, simulate(s, feedback_policy(s), StateVec::sir(0.8, 0.01), 1.0, Tolerances{})));
}

TEST_CASE("sha256 known vectors") {
  CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("atomic writes") {
  const fs::path dir = scratch("atomic");
  const fs::path f = dir / "nested" / "out.txt";
  io::write_file_atomic(f, "first\n");
  CHECK(io::read_file(f) == "first\n");
  io::write_file_atomic(f, "second\n");
  CHECK(io::read_file(f) == "second\n");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(f.parent_path())) ++entries;
  CHECK(entries == 1);
  CHECK(error_of([&] { io::read_file(dir / "missing.json"); }) == ErrorCode::BadArgument);
  fs::remove_all(dir);
}

TEST_CASE("config parsing") {
  const io::Config c = io::parse_config(
      R"({"variant":"SIR_PERFECT","beta":[0.6,0.8],"gamma":0.5,"i_max":0.02,"tolerances":{"step_h":0.002}})");
  CHECK(c.scenario.i_max == 0.02);
  CHECK(c.tolerances.step_h == 0.002);
  CHECK(c.tolerances.geom_tol == Tolerances{}.geom_tol);
  CHECK(error_of([] { io::parse_config("{not json"); }) == ErrorCode::RejectFields);
  CHECK(error_of([] { io::parse_config(R"({"variant":"SIR_PERFECT"})"); }) == ErrorCode::RejectFields);
  CHECK(error_of([] {
          io::parse_config(
              R"({"variant":"SIR_PERFECT","beta":[0.6,0.8],"gamma":0.5,"i_max":0.02,"tolerances":{"step_h":-1}})");
        }) == ErrorCode::RejectTolerances);

  const fs::path dir = scratch("config");
  const fs::path f = dir / "c.json";
  io::write_file_atomic(f, c.text);
  const io::Config loaded = io::load_config(f);
  CHECK(loaded.text == c.text);
  CHECK(io::sha256_hex(loaded.text) == io::sha256_hex(c.text));
  fs::remove_all(dir);
}

TEST_CASE("manifest") {
  io::Manifest m;
  m.command = "barrier";
  m.scenario_digest = io::sha256_hex("x");
  const nlohmann::json j = io::to_json(m);
  CHECK(j["command"] == "barrier");
  CHECK(j["seed"].is_null());
  CHECK(j["version"] == std::string(io::kVersion));
  CHECK(j["tolerances"]["step_h"] == 1e-3);
  m.seed = 42;
  CHECK(io::to_json(m)["seed"] == 42);
}

}  // TEST_SUITE
