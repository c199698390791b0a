#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pst/pst.hpp"

namespace pst::cli {

using nlohmann::json;

/// Malformed flag value that CLI11 itself cannot catch (time literals, bounds).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string format = "text";
  std::string geometry = "open";
  std::optional<int> n;
  std::string couplings;
  std::string profile_file;
  std::string config;
  int from = 1;
  int to = 0;
  std::string time = "pi";
  std::string tmax;
  int steps = 201;
  int restarts = 32;
  std::uint64_t seed = 0;
  bool path_symmetric = false;
  std::string bounds;
  int emax = 8;
  std::string time_class = "pi";
  std::optional<double> tol;
};

inline double parse_number(const std::string& s, std::string_view what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw UsageError("invalid " + std::string(what) + " '" + s + "'");
  return v;
}

/// float | pi | pi/2, and `free` where free-time optimization is meaningful.
inline std::optional<double> parse_time(const std::string& s, bool allow_free) {
  if (s == "pi") return std::numbers::pi;
  if (s == "pi/2") return std::numbers::pi / 2.0;
  if (s == "free") {
    if (!allow_free) throw UsageError("'free' is only accepted by optimize and classify");
    return std::nullopt;
  }
  return parse_number(s, "time");
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number(item, "coupling"));
  return out;
}

inline CouplingProfile load_profile(const Options& o) {
  if (!o.profile_file.empty()) {
    const json j = read_json_file(o.profile_file);
    return profile_from_json(j.is_object() && j.contains("profile") ? j.at("profile") : j);
  }
  if (o.couplings.empty()) throw UsageError("a profile is required: pass --couplings or --profile-file");
  const Geometry g = parse_geometry(o.geometry);
  auto j = parse_list(o.couplings);
  if (o.n) return CouplingProfile(g, *o.n, std::move(j));
  return CouplingProfile::from_couplings(g, std::move(j));
}

inline int require_n(const Options& o) {
  if (!o.n) throw UsageError("--n is required");
  return *o.n;
}

inline OptimizationConfig search_config(const Options& o) {
  OptimizationConfig c;
  c.restarts = o.restarts;
  c.seed = o.seed;
  c.retrieval_time = parse_time(o.time, true);
  if (!o.tmax.empty()) c.t_max = *parse_time(o.tmax, false);
  if (!o.bounds.empty()) {
    const auto colon = o.bounds.find(':');
    if (colon == std::string::npos) throw UsageError("--bounds expects lo:hi");
    c.j_min = parse_number(o.bounds.substr(0, colon), "lower bound");
    c.j_max = parse_number(o.bounds.substr(colon + 1), "upper bound");
  }
  if (o.path_symmetric) c.symmetry = PathSymmetry{o.from, o.to, true};
  return c;
}

inline std::string fmt(double v) { return format_double(v); }

inline std::string join(std::span<const double> v, std::string_view sep = " ") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += fmt(v[i]);
  }
  return s;
}

inline void print_json(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

// ---------------------------------------------------------------- commands

inline void cmd_spectrum(const Options& o, std::ostream& out) {
  const auto profile = load_profile(o);
  const auto spec = decompose(build_hamiltonian(profile));
  const int n = spec.sites();
  if (o.format == "json") {
    json vecs = json::array();
    for (int i = 1; i <= n; ++i) {
      json v = json::array();
      for (int k = 1; k <= n; ++k) v.push_back(spec.component(i, k));
      vecs.push_back(v);
    }
    std::vector<double> e(spec.eigenvalues.data(), spec.eigenvalues.data() + n);
    print_json(out, {{"profile", profile_to_json(profile)},
                     {"eigenvalues", e},
                     {"eigenvectors", vecs},
                     {"degenerate", spec.degenerate()},
                     {"sweeps", spec.sweeps}});
    return;
  }
  out << to_string(profile.geometry()) << " N=" << n << "  J = " << join(profile.couplings()) << '\n';
  out << std::setw(4) << "i" << std::setw(24) << "E_i";
  for (int k = 1; k <= n; ++k) out << std::setw(24) << ("v_i" + std::to_string(k));
  out << '\n';
  for (int i = 1; i <= n; ++i) {
    out << std::setw(4) << i << std::setw(24) << fmt(spec.eigenvalues(i - 1));
    for (int k = 1; k <= n; ++k) out << std::setw(24) << fmt(spec.component(i, k));
    out << '\n';
  }
  if (spec.degenerate()) out << "warning: degenerate spectrum, eigenvector basis is gauge-dependent\n";
}

inline void cmd_fidelity(const Options& o, std::ostream& out) {
  const auto profile = load_profile(o);
  const double t = *parse_time(o.time, false);
  const auto spec = decompose(build_hamiltonian(profile));
  require_site(spec.sites(), o.from, "source");
  require_site(spec.sites(), o.to, "target");
  const auto a = amplitude(spec, o.from, o.to, t);
  const double f = std::norm(a);
  if (o.format == "json") {
    print_json(out, {{"profile", profile_to_json(profile)},
                     {"source", o.from},
                     {"target", o.to},
                     {"time", t},
                     {"amplitude", {a.real(), a.imag()}},
                     {"fidelity", f}});
    return;
  }
  out << "F(" << o.from << " -> " << o.to << ", t=" << fmt(t) << ") = " << fmt(f) << '\n';
}

inline void cmd_trajectory(const Options& o, std::ostream& out) {
  const auto profile = load_profile(o);
  if (o.tmax.empty()) throw UsageError("--tmax is required");
  const double t_max = *parse_time(o.tmax, false);
  require_site(profile.sites(), o.from, "source");
  const auto rec = trajectory(build_hamiltonian(profile), o.from, t_max, o.steps);
  if (o.format == "json") {
    json j = trajectory_to_json(rec);
    j["profile"] = profile_to_json(profile);
    j["source"] = o.from;
    print_json(out, j);
  } else if (o.format == "csv") {
    write_trajectory_csv(out, rec);
  } else {
    const std::size_t n = rec.probabilities.front().size();
    out << std::setw(24) << "time";
    for (std::size_t k = 1; k <= n; ++k) out << std::setw(24) << ("p" + std::to_string(k));
    out << '\n';
    for (std::size_t r = 0; r < rec.times.size(); ++r) {
      out << std::setw(24) << fmt(rec.times[r]);
      for (double p : rec.probabilities[r]) out << std::setw(24) << fmt(p);
      out << '\n';
    }
  }
}

inline void cmd_check(const Options& o, std::ostream& out) {
  const auto profile = load_profile(o);
  const auto spec = decompose(build_hamiltonian(profile));
  require_site(spec.sites(), o.from, "source");
  require_site(spec.sites(), o.to, "target");
  PstTolerances tol;
  if (o.tol) tol.criterion1 = tol.ratio = tol.fidelity = *o.tol;
  const auto a = analyze_pst(spec, o.from, o.to, tol);
  std::optional<double> f;
  if (a.retrieval_time) f = fidelity(spec, {o.from, o.to, a.retrieval_time}, *a.retrieval_time);

  if (o.format == "json") {
    const auto& c = a.commensurability;
    print_json(out, {{"profile", profile_to_json(profile)},
                     {"source", o.from},
                     {"target", o.to},
                     {"criterion1",
                      {{"satisfied", a.criterion1.satisfied},
                       {"max_residual", a.criterion1.max_residual},
                       {"gauge_dependent", a.criterion1.gauge_dependent}}},
                     {"commensurability",
                      {{"commensurate", c.commensurate},
                       {"base_unit", c.base_unit},
                       {"integers", c.integer_spectrum},
                       {"period", c.period},
                       {"max_residual", c.max_residual}}},
                     {"participating", a.participating},
                     {"pst", a.retrieval_time.has_value()},
                     {"retrieval_time", a.retrieval_time ? json(*a.retrieval_time) : json(nullptr)},
                     {"fidelity", f ? json(*f) : json(nullptr)}});
    return;
  }
  out << "criterion 1 (|v_im| = |v_in|): " << (a.criterion1.satisfied ? "yes" : "no")
      << "  max residual " << fmt(a.criterion1.max_residual)
      << (a.criterion1.gauge_dependent ? "  (degenerate spectrum)" : "") << '\n';
  out << "commensurable spectrum: " << (a.commensurability.commensurate ? "yes" : "no");
  if (a.commensurability.commensurate) {
    out << "  unit " << fmt(a.commensurability.base_unit) << "  integers";
    for (auto k : a.commensurability.integer_spectrum) out << ' ' << k;
  }
  out << '\n';
  if (a.retrieval_time)
    out << "PST " << o.from << " -> " << o.to << " at t* = " << fmt(*a.retrieval_time) << "  F = " << fmt(*f) << '\n';
  else
    out << "no PST " << o.from << " -> " << o.to << '\n';
}

inline json verdict_json(const ReachabilityVerdict& v) {
  json j = {{"status", std::string(to_string(v.status))}, {"rule", v.rule}, {"numerical_evidence", v.numerical_evidence}};
  if (v.evidence) {
    json e = {{"restarts", v.evidence->restarts}};
    if (v.evidence->profile) e["profile"] = profile_to_json(*v.evidence->profile);
    if (v.evidence->retrieval_time) e["retrieval_time"] = *v.evidence->retrieval_time;
    if (v.evidence->best_fidelity) e["best_fidelity"] = *v.evidence->best_fidelity;
    j["evidence"] = e;
  }
  return j;
}

inline void cmd_classify(const Options& o, std::ostream& out) {
  const int n = require_n(o);
  const Geometry g = parse_geometry(o.geometry);
  const auto v = classify_with_evidence(n, g, o.from, o.to, search_config(o));
  if (o.format == "json") {
    json j = verdict_json(v);
    j["n"] = n;
    j["geometry"] = std::string(to_string(g));
    j["source"] = o.from;
    j["target"] = o.to;
    print_json(out, j);
    return;
  }
  out << to_string(v.status) << " (rule " << v.rule << ")" << (v.numerical_evidence ? " [numerical evidence]" : "")
      << '\n';
  if (v.evidence && v.evidence->best_fidelity) {
    out << "optimizer: best F = " << fmt(*v.evidence->best_fidelity);
    if (v.evidence->retrieval_time) out << " at t = " << fmt(*v.evidence->retrieval_time);
    out << " over " << v.evidence->restarts << " restarts\n";
  }
  if (v.evidence && v.evidence->profile) out << "profile: " << join(v.evidence->profile->couplings()) << '\n';
}

inline char verdict_symbol(const ReachabilityVerdict& v) {
  if (v.rule == rules::kRevival) return 'o';
  switch (v.status) {
    case Reachability::Reachable: return 'R';
    case Reachability::Excluded: return 'X';
    default: return '?';
  }
}

inline void cmd_map(const Options& o, std::ostream& out) {
  const int n = require_n(o);
  const Geometry g = parse_geometry(o.geometry);
  const auto map = reachability_map(n, g);
  if (o.format == "json") {
    json rows = json::array();
    for (int m = 1; m <= n; ++m) {
      json row = json::array();
      for (int k = 1; k <= n; ++k) row.push_back(verdict_json(map.at(m, k)));
      rows.push_back(row);
    }
    print_json(out, {{"n", n}, {"geometry", std::string(to_string(g))}, {"verdicts", rows}});
    return;
  }
  const int w = std::max(3, static_cast<int>(std::to_string(n).size()) + 2);
  out << to_string(g) << " N=" << n << "  (row = source, column = target)\n";
  out << std::setw(w) << "";
  for (int k = 1; k <= n; ++k) out << std::setw(w) << k;
  out << '\n';
  bool flagged = false;
  for (int m = 1; m <= n; ++m) {
    out << std::setw(w) << m;
    for (int k = 1; k <= n; ++k) {
      const auto& v = map.at(m, k);
      std::string cell(1, verdict_symbol(v));
      if (v.numerical_evidence) {
        cell += '*';
        flagged = true;
      }
      out << std::setw(w) << cell;
    }
    out << '\n';
  }
  out << "R reachable, X excluded, ? undetermined, o revival";
  if (flagged) out << ", * numerical evidence only";
  out << '\n';
}

inline void cmd_optimize(const Options& o, std::ostream& out) {
  const int n = require_n(o);
  const Geometry g = parse_geometry(o.geometry);
  const auto r = optimize(n, g, o.from, o.to, search_config(o));
  if (o.format == "json") {
    json restarts = json::array();
    for (const auto& s : r.per_restart)
      restarts.push_back({{"index", s.index},
                          {"fidelity", s.fidelity},
                          {"time", s.time},
                          {"evaluations", s.evaluations},
                          {"converged", s.converged},
                          {"couplings", s.couplings}});
    print_json(out, {{"profile", profile_to_json(r.best_profile)},
                     {"source", o.from},
                     {"target", o.to},
                     {"fidelity", r.best_fidelity},
                     {"time", r.best_time},
                     {"evaluations", r.evaluations},
                     {"restarts", restarts}});
    return;
  }
  out << "best F(" << o.from << " -> " << o.to << ") = " << fmt(r.best_fidelity) << "  (1 - F = "
      << fmt(1.0 - r.best_fidelity) << ")\n";
  out << "time " << fmt(r.best_time) << '\n';
  out << "couplings " << join(r.best_profile.couplings()) << '\n';
  out << r.per_restart.size() << " restarts, " << r.evaluations << " evaluations\n";
}

inline void cmd_design(const Options& o, std::ostream& out) {
  const int n = require_n(o);
  const Geometry g = parse_geometry(o.geometry);
  TimeClass cls;
  if (o.time_class == "pi")
    cls = TimeClass::Integer;
  else if (o.time_class == "pi/2")
    cls = TimeClass::Odd;
  else
    throw UsageError("--time-class expects pi or pi/2");
  const auto designs = enumerate_designs(n, g, o.from, o.to, o.emax, cls);
  if (o.format == "json") {
    json list = json::array();
    for (const auto& d : designs)
      list.push_back({{"spectrum",
                       {{"integers", d.spectrum.integers},
                        {"base_unit", d.spectrum.base_unit},
                        {"time_class", std::string(to_string(d.spectrum.time_class))},
                        {"retrieval_time", d.spectrum.retrieval_time()},
                        {"energies", d.spectrum.energies()}}},
                      {"signs", d.signs},
                      {"profile", profile_to_json(d.profile)},
                      {"fidelity", d.fidelity}});
    print_json(out, {{"n", n},
                     {"geometry", std::string(to_string(g))},
                     {"source", o.from},
                     {"target", o.to},
                     {"emax", o.emax},
                     {"time_class", std::string(to_string(cls))},
                     {"designs", list}});
    return;
  }
  out << designs.size() << " design(s) for " << to_string(g) << " N=" << n << ", " << o.from << " -> " << o.to
      << ", t* = " << to_string(cls) << '\n';
  for (const auto& d : designs) {
    out << "spectrum";
    for (int k : d.spectrum.integers) out << ' ' << k;
    out << "  signs";
    for (int s : d.signs) out << ' ' << (s > 0 ? '+' : '-');
    out << "\n  J = " << join(d.profile.couplings()) << "  F = " << fmt(d.fidelity) << '\n';
  }
}

// ---------------------------------------------------------------- parsing

namespace detail {

inline bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

/// Appends config-file entries as flags unless the command line already sets
/// them, so explicit flags win.
inline void merge_config(std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return;
  const json cfg = read_json_file(path);
  if (!cfg.is_object()) throw DomainError(path + ": config must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    if (key == "config") throw DomainError(path + ": config files cannot nest");
    if (has_flag(args, flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      std::string s;
      for (const auto& x : value) {
        if (!s.empty()) s += ',';
        s += x.is_string() ? x.get<std::string>() : x.dump();
      }
      args.push_back(flag);
      args.push_back(s);
    } else if (value.is_string()) {
      args.push_back(flag);
      args.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back(flag);
      args.push_back(value.is_number_float() ? format_double(value.get<double>()) : value.dump());
    } else {
      throw DomainError(path + ": unsupported value for '" + key + "'");
    }
  }
}

}  // namespace detail

/// Runs one pst-forge invocation. Exit status: 0 success, 1 domain error,
/// 2 usage error.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Perfect state transfer coupling design for XX spin chains", "pst-forge"};
  app.require_subcommand(1, 1);

  auto format = [&](CLI::App* c, std::vector<std::string> allowed) {
    c->add_option("--format", o.format, "Output format")->check(CLI::IsMember(allowed));
  };
  auto profile = [&](CLI::App* c) {
    c->add_option("--geometry", o.geometry, "open | closed")->check(CLI::IsMember({"open", "closed"}));
    c->add_option("--n", o.n, "Number of sites")->check(CLI::PositiveNumber);
    c->add_option("--couplings", o.couplings, "Comma-separated J_1,...");
    c->add_option("--profile-file", o.profile_file, "Coupling profile JSON");
  };
  auto chain = [&](CLI::App* c) {
    c->add_option("--geometry", o.geometry, "open | closed")->check(CLI::IsMember({"open", "closed"}));
    c->add_option("--n", o.n, "Number of sites")->check(CLI::PositiveNumber);
  };
  auto pair = [&](CLI::App* c, bool target) {
    c->add_option("--from", o.from, "Source site (1-based)")->required();
    if (target) c->add_option("--to", o.to, "Target site (1-based)")->required();
  };
  auto search = [&](CLI::App* c) {
    c->add_option("--time", o.time, "Retrieval time: float | pi | pi/2 | free");
    c->add_option("--tmax", o.tmax, "Upper time bound in free-time mode");
    c->add_option("--restarts", o.restarts, "Optimizer restarts")->check(CLI::PositiveNumber);
    c->add_option("--seed", o.seed, "Optimizer seed");
    c->add_flag("--path-symmetric", o.path_symmetric, "Palindromic couplings along both ring paths");
    c->add_option("--bounds", o.bounds, "Coupling box lo:hi");
  };
  auto config = [&](CLI::App* c) { c->add_option("--config", o.config, "JSON file mirroring the flags"); };

  auto* spectrum = app.add_subcommand("spectrum", "Eigenvalues and eigenvectors of a profile");
  profile(spectrum);
  format(spectrum, {"json", "text"});
  config(spectrum);

  auto* fid = app.add_subcommand("fidelity", "Transfer fidelity at a given time");
  profile(fid);
  pair(fid, true);
  format(fid, {"json", "text"});
  config(fid);
  fid->add_option("--time", o.time, "float | pi | pi/2")->required();

  auto* traj = app.add_subcommand("trajectory", "Site populations over [0, tmax]");
  profile(traj);
  pair(traj, false);
  format(traj, {"json", "csv", "text"});
  config(traj);
  traj->add_option("--tmax", o.tmax, "float | pi | pi/2")->required();
  traj->add_option("--steps", o.steps, "Number of samples")->check(CLI::Range(2, 1000000));

  auto* check = app.add_subcommand("check", "Criterion 1, commensurability and PST time for a profile");
  profile(check);
  pair(check, true);
  format(check, {"json", "text"});
  config(check);
  check->add_option("--tol", o.tol, "Tolerance for criterion 1, spectrum ratios and fidelity")
      ->check(CLI::PositiveNumber);

  auto* cls = app.add_subcommand("classify", "Reachability verdict for a site pair");
  chain(cls);
  pair(cls, true);
  search(cls);
  format(cls, {"json", "text"});
  config(cls);

  auto* map = app.add_subcommand("map", "Reachability verdicts for every pair");
  chain(map);
  format(map, {"json", "text"});
  config(map);

  auto* opt = app.add_subcommand("optimize", "Multi-start search for high-fidelity couplings");
  chain(opt);
  pair(opt, true);
  search(opt);
  format(opt, {"json", "text"});
  config(opt);

  auto* design = app.add_subcommand("design", "Constructive designs over integer spectra");
  chain(design);
  pair(design, true);
  format(design, {"json", "text"});
  config(design);
  design->add_option("--emax", o.emax, "Largest |k_i|")->check(CLI::Range(1, 32));
  design->add_option("--time-class", o.time_class, "pi (integer spectra) | pi/2 (odd spectra)")
      ->check(CLI::IsMember({"pi", "pi/2"}));

  auto domain_error = [&](const std::string& msg) {
    if (o.format == "json")
      out << json{{"error", {{"type", "domain"}, {"message", msg}}}}.dump(2) << '\n';
    else
      err << "error: " << msg << '\n';
    return 1;
  };

  try {
    detail::merge_config(args);
  } catch (const DomainError& e) {
    return domain_error(e.what());
  }

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*spectrum) cmd_spectrum(o, out);
    if (*fid) cmd_fidelity(o, out);
    if (*traj) cmd_trajectory(o, out);
    if (*check) cmd_check(o, out);
    if (*cls) cmd_classify(o, out);
    if (*map) cmd_map(o, out);
    if (*opt) cmd_optimize(o, out);
    if (*design) cmd_design(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    return domain_error(e.what());
  }
  return 0;
}

}  // namespace pst::cli
