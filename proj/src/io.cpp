#include "epibarrier/io.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace epibarrier::io {

namespace fs = std::filesystem;
using nlohmann::json;

Config parse_config(std::string text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::RejectFields, std::string("config is not valid JSON: ") + e.what());
  }
  Config cfg;
  cfg.scenario = validate_scenario(doc);
  cfg.tolerances = parse_tolerances(doc.contains("tolerances") ? doc["tolerances"] : json());
  cfg.text = std::move(text);
  return cfg;
}

Config load_config(const fs::path& path) { return parse_config(read_file(path)); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::BadArgument, "cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::BadArgument, "SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::BadArgument, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::BadArgument, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string format_double(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

namespace {

std::vector<std::string> state_columns(const Scenario& s) {
  if (s.seir()) return {"S", "E", "I"};
  return {"S", "I"};
}

std::string rate_name(Channel c) {
  switch (c) {
    case Channel::Beta: return "beta";
    case Channel::Gamma: return "gamma";
    case Channel::Eta: return "eta";
  }
  return "?";
}

class CsvWriter {
 public:
  void header(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) os_ << ',';
      os_ << cols[i];
    }
    os_ << '\n';
  }
  CsvWriter& cell(double v) {
    sep();
    os_ << format_double(v);
    return *this;
  }
  CsvWriter& cell(int v) {
    sep();
    os_ << v;
    return *this;
  }
  void end() {
    os_ << '\n';
    first_ = true;
  }
  std::string str() const { return os_.str(); }

 private:
  void sep() {
    if (!first_) os_ << ',';
    first_ = false;
  }
  std::ostringstream os_;
  bool first_ = true;
};

json witness_json(const Classification& c) {
  json w = json::array();
  for (const auto& x : c.witnesses) w.push_back({{"name", x.name}, {"lhs", x.lhs}, {"rhs", x.rhs}});
  return w;
}

json state_json(const StateVec& x) {
  json a = json::array();
  for (double v : x.components()) a.push_back(v);
  return a;
}

std::string portion_name(geometry::Portion p) {
  switch (p) {
    case geometry::Portion::Barrier: return "barrier";
    case geometry::Portion::Usable: return "usable";
    case geometry::Portion::Face: return "face";
  }
  return "?";
}

geometry::Portion parse_portion(const std::string& s) {
  if (s == "barrier") return geometry::Portion::Barrier;
  if (s == "usable") return geometry::Portion::Usable;
  if (s == "face") return geometry::Portion::Face;
  throw Error(ErrorCode::BadArgument, "unknown boundary tag: " + s);
}

json termination_json(const EventSpec& e) {
  json j{{"kind", std::string(to_string(e.kind))}};
  if (e.kind == EventKind::DomainExit || e.kind == EventKind::IFloor) {
    j["face"] = std::string(to_string(static_cast<Face>(e.id)));
  } else if (e.kind == EventKind::SignChange) {
    j["channel"] = rate_name(static_cast<Channel>(e.id));
  }
  return j;
}

}  // namespace

std::string curve_csv(const Scenario& s, const BarrierCurve& c) {
  std::vector<std::string> cols{"t"};
  for (const auto& n : state_columns(s)) cols.push_back(n);
  for (std::size_t i = 1; i <= s.dim(); ++i) cols.push_back("lambda" + std::to_string(i));
  const auto rates = reported_channels(s.variant);
  for (Channel ch : rates) cols.push_back(rate_name(ch));
  cols.push_back("switch_flag");
  CsvWriter w;
  w.header(cols);
  for (const auto& r : c.samples) {
    w.cell(r.t);
    for (double v : r.state.components()) w.cell(v);
    for (double v : r.adjoint.components()) w.cell(v);
    for (Channel ch : rates) w.cell(channel_value(r.input, ch));
    w.cell(r.switch_flag ? 1 : 0);
    w.end();
  }
  return w.str();
}

json curve_json(const Scenario& s, const BarrierCurve& c) {
  json samples = json::array();
  const auto rates = reported_channels(s.variant);
  for (const auto& r : c.samples) {
    json j{{"t", r.t}, {"state", state_json(r.state)}};
    json lam = json::array();
    for (double v : r.adjoint.components()) lam.push_back(v);
    j["lambda"] = lam;
    for (Channel ch : rates) j[rate_name(ch)] = channel_value(r.input, ch);
    j["switch_flag"] = r.switch_flag;
    samples.push_back(std::move(j));
  }
  return {{"tangent_point", state_json(c.tangent_point)}, {"samples", samples}};
}

std::string trajectory_csv(const Scenario& s, const Trajectory& t) {
  std::vector<std::string> cols{"t"};
  for (const auto& n : state_columns(s)) cols.push_back(n);
  cols.push_back("R");
  const auto rates = reported_channels(s.variant);
  for (Channel ch : rates) cols.push_back(rate_name(ch));
  CsvWriter w;
  w.header(cols);
  for (const auto& smp : t.samples) {
    w.cell(smp.t);
    for (double v : smp.state.components()) w.cell(v);
    w.cell(reconstruct_removed(smp.state));
    for (Channel ch : rates) w.cell(channel_value(smp.input, ch));
    w.end();
  }
  return w.str();
}

json to_json(const Manifest& m) {
  json j{{"command", m.command},
         {"scenario_digest", m.scenario_digest},
         {"tolerances", epibarrier::to_json(m.tolerances)},
         {"version", m.version},
         {"runtime_seconds", m.runtime_seconds}};
  j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
  return j;
}

json set_to_json(const ComputedSet& set, const std::vector<std::string>& curve_files) {
  json j;
  j["set_kind"] = std::string(to_string(set.kind));
  j["scenario"] = epibarrier::to_json(set.scenario);
  j["tolerances"] = epibarrier::to_json(set.tolerances);
  j["classification"] = {{"tag", std::string(to_string(set.classification.tag))},
                         {"witnesses", witness_json(set.classification)}};
  j["trivial"] = set.trivial;
  if (set.usable) {
    const UsablePart& u = *set.usable;
    json up{{"i_max", u.i_max}, {"S", {0.0, u.s_hi}}};
    if (u.dim == 3) up["E_cap"] = {{"coefficient", u.e_coeff}, {"rule", "min(coefficient, 1 - S - i_max)"}};
    j["usable_part"] = up;
  } else {
    j["usable_part"] = nullptr;
  }
  if (set.tangent) {
    const TangentSet& t = *set.tangent;
    json tj{{"z1", {t.z1_lo, t.z1_hi}}, {"i_max", t.i_max}};
    if (t.point()) {
      tj["point"] = {t.z1_lo, t.i_max};
      tj["second_derivative"] = t.second_derivative;
    } else {
      tj["z2"] = t.z2;
      tj["endpoints"] = {{t.z1_lo, t.z2, t.i_max}, {t.z1_hi, t.z2, t.i_max}};
    }
    j["tangent_set"] = tj;
  } else {
    j["tangent_set"] = nullptr;
  }
  json curves = json::array();
  for (std::size_t i = 0; i < set.curves.size(); ++i) {
    const BarrierCurve& c = set.curves[i];
    json sw = json::array();
    for (const auto& e : c.switches) {
      sw.push_back({{"t", e.t}, {"channel", rate_name(e.channel)}, {"from", e.from}, {"to", e.to}});
    }
    curves.push_back({{"file", i < curve_files.size() ? json(curve_files[i]) : json(nullptr)},
                      {"z1", set.abscissas.at(i)},
                      {"tangent_point", state_json(c.tangent_point)},
                      {"termination", termination_json(c.termination)},
                      {"t_end", c.samples.empty() ? 0.0 : c.samples.back().t},
                      {"samples", c.samples.size()},
                      {"step_h", c.step_h},
                      {"switches", sw},
                      {"truncated", c.truncated}});
  }
  j["curves"] = curves;
  json specials = json::array();
  for (const auto& seg : set.special_segments) {
    json pts = json::array();
    for (const auto& p : seg.points) pts.push_back(state_json(p));
    specials.push_back({{"label", seg.label}, {"points", pts}});
  }
  j["special_segments"] = specials;
  if (!set.boundary.empty()) {
    json verts = json::array();
    json tags = json::array();
    for (const auto& v : set.boundary.vertices()) verts.push_back({v.x, v.y});
    for (auto t : set.boundary.tags()) tags.push_back(portion_name(t));
    j["boundary"] = {{"vertices", verts}, {"edge_tags", tags}};
  }
  if (!set.mesh.empty()) {
    json verts = json::array();
    json tris = json::array();
    for (const auto& v : set.mesh.mesh().vertices) verts.push_back({v.x, v.y, v.z});
    for (const auto& t : set.mesh.mesh().triangles) tris.push_back({t[0], t[1], t[2]});
    j["mesh"] = {{"nodes_per_curve", set.mesh_nodes}, {"vertices", verts}, {"triangles", tris}};
  }
  return j;
}

ComputedSet set_from_json(const json& doc) {
  try {
    ComputedSet set;
    set.kind = parse_set_kind(doc.at("set_kind").get<std::string>());
    set.scenario = validate_scenario(doc.at("scenario"));
    set.tolerances = parse_tolerances(doc.at("tolerances"));
    set.classification = classify(set.scenario);
    set.trivial = doc.at("trivial").get<bool>();
    if (set.trivial) return set;
    set.usable = usable_part(set.scenario, set.kind);
    set.tangent = tangent_set(set.scenario, set.kind);
    for (const auto& c : doc.at("curves")) set.abscissas.push_back(c.at("z1").get<double>());
    for (const auto& seg : doc.at("special_segments")) {
      SpecialSegment sp{seg.at("label").get<std::string>(), {}};
      for (const auto& p : seg.at("points")) sp.points.push_back(StateVec::from_span(p.get<std::vector<double>>()));
      set.special_segments.push_back(std::move(sp));
    }
    if (doc.contains("boundary")) {
      std::vector<geometry::Point2> verts;
      std::vector<geometry::Portion> tags;
      for (const auto& v : doc["boundary"].at("vertices")) verts.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
      for (const auto& t : doc["boundary"].at("edge_tags")) tags.push_back(parse_portion(t.get<std::string>()));
      set.boundary = geometry::BoundaryPolygon(std::move(verts), std::move(tags));
    }
    if (doc.contains("mesh")) {
      geometry::TriMesh mesh;
      for (const auto& v : doc["mesh"].at("vertices")) {
        mesh.vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()});
      }
      for (const auto& t : doc["mesh"].at("triangles")) {
        mesh.triangles.push_back({t.at(0).get<std::uint32_t>(), t.at(1).get<std::uint32_t>(), t.at(2).get<std::uint32_t>()});
      }
      set.mesh_nodes = doc["mesh"].at("nodes_per_curve").get<std::size_t>();
      set.mesh = geometry::MeshIndex(std::move(mesh));
    }
    return set;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::RejectFields, std::string("malformed set document: ") + e.what());
  }
}

}  // namespace epibarrier::io
