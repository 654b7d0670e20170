#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "epibarrier/barrier.hpp"
#include "epibarrier/core.hpp"
#include "epibarrier/policy.hpp"

namespace epibarrier::io {

inline constexpr std::string_view kVersion = "0.1.0";

struct Config {
  Scenario scenario;
  Tolerances tolerances;
  std::string text;  // raw file content, hashed into the manifest
};

/// Reads and validates a scenario file. Unparseable JSON is REJECT_FIELDS; an unreadable
/// file is BAD_ARGUMENT.
Config load_config(const std::filesystem::path& path);
Config parse_config(std::string text);

std::string sha256_hex(std::string_view data);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// 17 significant digits.
std::string format_double(double v);

std::string curve_csv(const Scenario& s, const BarrierCurve& c);
nlohmann::json curve_json(const Scenario& s, const BarrierCurve& c);
std::string trajectory_csv(const Scenario& s, const Trajectory& t);

struct Manifest {
  std::string command;
  std::string scenario_digest;
  Tolerances tolerances;
  std::optional<std::uint64_t> seed;
  std::string version{kVersion};
  double runtime_seconds = 0.0;
};

nlohmann::json to_json(const Manifest& m);

nlohmann::json set_to_json(const ComputedSet& set, const std::vector<std::string>& curve_files);
/// Rebuilds a queryable set (boundary or mesh, usable part, tangent set) from set.json.
/// Curves are not restored; their files are listed in the document.
ComputedSet set_from_json(const nlohmann::json& doc);

}  // namespace epibarrier::io
