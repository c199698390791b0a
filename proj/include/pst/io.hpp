#pragma once

#include <charconv>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>

#include "json.hpp"
#include "pst/chain.hpp"
#include "pst/dynamics.hpp"

namespace pst {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc()) return std::to_string(v);
  return std::string(buf, res.ptr);
}

/// {"geometry": "open"|"closed", "n": int, "couplings": [float, ...]}
inline nlohmann::json profile_to_json(const CouplingProfile& p) {
  return {{"geometry", std::string(to_string(p.geometry()))}, {"n", p.sites()}, {"couplings", p.coupling_vector()}};
}

inline CouplingProfile profile_from_json(const nlohmann::json& j) {
  try {
    const Geometry g = parse_geometry(j.at("geometry").get<std::string>());
    auto couplings = j.at("couplings").get<std::vector<double>>();
    if (j.contains("n")) return CouplingProfile(g, j.at("n").get<int>(), std::move(couplings));
    return CouplingProfile::from_couplings(g, std::move(couplings));
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed coupling profile: ") + e.what());
  }
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError(path + ": " + e.what());
  }
}

/// CSV with header time,p1,...,pN.
inline void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& rec) {
  const std::size_t n = rec.probabilities.empty() ? 0 : rec.probabilities.front().size();
  out << "time";
  for (std::size_t k = 1; k <= n; ++k) out << ",p" << k;
  out << '\n';
  for (std::size_t r = 0; r < rec.times.size(); ++r) {
    out << format_double(rec.times[r]);
    for (double p : rec.probabilities[r]) out << ',' << format_double(p);
    out << '\n';
  }
}

inline nlohmann::json trajectory_to_json(const TrajectoryRecord& rec) {
  return {{"times", rec.times}, {"probabilities", rec.probabilities}};
}

}  // namespace pst
