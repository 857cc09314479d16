#ifndef ERASER_CONFIG_HPP
#define ERASER_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "eraser/analysis.hpp"
#include "eraser/protocol.hpp"

// Run configuration file: sectioned key = value plain text, '#' comments.
// Angles in the file are degrees and are converted at this boundary.
// Unknown sections or keys are hard errors, so a run is fully reproducible
// from the file plus CLI flags alone.

namespace eraser {

inline double deg_to_rad(double deg) { return deg * M_PI / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / M_PI; }

struct SweepRange {
  double start_deg = 0.0, stop_deg = 0.0, step_deg = 1.0;

  std::vector<double> values_deg() const {
    if (step_deg <= 0.0)
      throw std::invalid_argument("sweep step must be positive");
    std::vector<double> out;
    for (int i = 0;; ++i) {
      const double v = start_deg + i * step_deg;
      if (v > stop_deg + 1e-9) break;
      out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty sweep range");
    return out;
  }
};

struct RunConfig {
  // [experiment]
  ExperimentConfig experiment;          // angles already in radians
  std::optional<SweepRange> alpha_sweep;  // degrees, overrides experiment.alpha
  std::optional<SweepRange> beta_sweep;
  ChshSettings chsh{0.0, M_PI / 4.0, M_PI / 8.0, 3.0 * M_PI / 8.0};
  std::string state = "heralded";  // heralded | phi_plus | phi_minus | xi_plus | xi_minus | mixture

  // [montecarlo]
  bool has_montecarlo = false;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  double efficiency_a = 1.0, efficiency_b = 1.0, efficiency_h = 1.0;

  // [crystal]
  std::string crystal_name = "calcite";
  double pump_nm = 405.0;

  // [output]
  std::string out_path;
};

namespace detail {

struct RawConfig {
  // (section, key) -> value string; insertion-ordered per file via map is
  // fine since duplicate keys are rejected.
  std::map<std::pair<std::string, std::string>, std::string> entries;
  std::string path;

  std::optional<std::string> get(const std::string& sec, const std::string& key) const {
    const auto it = entries.find({sec, key});
    if (it == entries.end()) return std::nullopt;
    return it->second;
  }
};

inline RawConfig read_raw_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  RawConfig raw;
  raw.path = path;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": key '" + key + "' outside any section");
    if (key.empty() || value.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": empty key or value");
    if (!raw.entries.emplace(std::pair{section, key}, value).second)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": duplicate key '" + key + "'");
  }
  return raw;
}

inline double parse_double(const RawConfig& raw, const std::string& sec,
                           const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(raw.path + ": key '" + sec + "." + key +
                             "' has non-numeric value '" + value + "'");
  }
}

inline std::uint64_t parse_u64(const RawConfig& raw, const std::string& sec,
                               const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(raw.path + ": key '" + sec + "." + key +
                             "' has non-integer value '" + value + "'");
  }
}

inline SweepRange parse_sweep(const RawConfig& raw, const std::string& sec,
                              const std::string& key, const std::string& value) {
  SweepRange r;
  std::istringstream iss(value);
  char c1 = 0, c2 = 0;
  if (!(iss >> r.start_deg >> c1 >> r.stop_deg >> c2 >> r.step_deg) || c1 != ':' ||
      c2 != ':' || !(iss >> std::ws).eof())
    throw std::runtime_error(raw.path + ": key '" + sec + "." + key +
                             "' must be start:stop:step degrees");
  return r;
}

}  // namespace detail

inline RunConfig load_run_config(const std::string& path) {
  const detail::RawConfig raw = detail::read_raw_config(path);
  RunConfig cfg;

  static const std::map<std::string, std::set<std::string>> schema = {
      {"experiment",
       {"herald", "gamma_deg", "herald_qwp_axis_deg", "alpha_deg", "beta_deg",
        "alpha_sweep", "beta_sweep", "qwp_a_deg", "qwp_b_deg", "state",
        "chsh_a_deg", "chsh_a_prime_deg", "chsh_b_deg", "chsh_b_prime_deg"}},
      {"montecarlo", {"n", "seed", "efficiency_a", "efficiency_b", "efficiency_h"}},
      {"crystal", {"name", "pump_nm"}},
      {"output", {"path"}},
  };
  for (const auto& [sk, value] : raw.entries) {
    const auto sec = schema.find(sk.first);
    if (sec == schema.end())
      throw std::runtime_error(raw.path + ": unknown section '" + sk.first + "'");
    if (!sec->second.count(sk.second))
      throw std::runtime_error(raw.path + ": unknown key '" + sk.first + "." +
                               sk.second + "'");
  }

  // [experiment]
  double gamma = M_PI / 4.0;
  if (const auto v = raw.get("experiment", "gamma_deg"))
    gamma = deg_to_rad(detail::parse_double(raw, "experiment", "gamma_deg", *v));
  std::string herald = raw.get("experiment", "herald").value_or("linear");
  if (herald == "direct") {
    cfg.experiment.herald = DirectHerald{};
  } else if (herald == "linear") {
    cfg.experiment.herald = LinearPolarizerHerald{gamma};
  } else if (herald == "circular") {
    double axis = M_PI / 4.0;
    if (const auto v = raw.get("experiment", "herald_qwp_axis_deg"))
      axis = deg_to_rad(detail::parse_double(raw, "experiment", "herald_qwp_axis_deg", *v));
    cfg.experiment.herald = CircularHerald{axis, gamma};
  } else {
    throw std::runtime_error(raw.path +
                             ": experiment.herald must be direct, linear or circular");
  }
  if (const auto v = raw.get("experiment", "alpha_deg"))
    cfg.experiment.alpha = deg_to_rad(detail::parse_double(raw, "experiment", "alpha_deg", *v));
  if (const auto v = raw.get("experiment", "beta_deg"))
    cfg.experiment.beta = deg_to_rad(detail::parse_double(raw, "experiment", "beta_deg", *v));
  if (const auto v = raw.get("experiment", "alpha_sweep"))
    cfg.alpha_sweep = detail::parse_sweep(raw, "experiment", "alpha_sweep", *v);
  if (const auto v = raw.get("experiment", "beta_sweep"))
    cfg.beta_sweep = detail::parse_sweep(raw, "experiment", "beta_sweep", *v);
  if (const auto v = raw.get("experiment", "qwp_a_deg"))
    cfg.experiment.qwp_A = deg_to_rad(detail::parse_double(raw, "experiment", "qwp_a_deg", *v));
  if (const auto v = raw.get("experiment", "qwp_b_deg"))
    cfg.experiment.qwp_B = deg_to_rad(detail::parse_double(raw, "experiment", "qwp_b_deg", *v));
  if (const auto v = raw.get("experiment", "state")) {
    static const std::set<std::string> states = {"heralded", "phi_plus", "phi_minus",
                                                 "xi_plus", "xi_minus", "mixture"};
    if (!states.count(*v))
      throw std::runtime_error(raw.path + ": unknown experiment.state '" + *v + "'");
    cfg.state = *v;
  }
  auto chsh_angle = [&](const std::string& key, double fallback) {
    if (const auto v = raw.get("experiment", key))
      return deg_to_rad(detail::parse_double(raw, "experiment", key, *v));
    return fallback;
  };
  cfg.chsh.a = chsh_angle("chsh_a_deg", cfg.chsh.a);
  cfg.chsh.a_prime = chsh_angle("chsh_a_prime_deg", cfg.chsh.a_prime);
  cfg.chsh.b = chsh_angle("chsh_b_deg", cfg.chsh.b);
  cfg.chsh.b_prime = chsh_angle("chsh_b_prime_deg", cfg.chsh.b_prime);

  // [montecarlo]
  if (const auto v = raw.get("montecarlo", "n")) {
    cfg.has_montecarlo = true;
    cfg.n = detail::parse_u64(raw, "montecarlo", "n", *v);
    if (cfg.n < 1) throw std::runtime_error(raw.path + ": montecarlo.n must be >= 1");
  }
  if (const auto v = raw.get("montecarlo", "seed"))
    cfg.seed = detail::parse_u64(raw, "montecarlo", "seed", *v);
  if (const auto v = raw.get("montecarlo", "efficiency_a"))
    cfg.efficiency_a = detail::parse_double(raw, "montecarlo", "efficiency_a", *v);
  if (const auto v = raw.get("montecarlo", "efficiency_b"))
    cfg.efficiency_b = detail::parse_double(raw, "montecarlo", "efficiency_b", *v);
  if (const auto v = raw.get("montecarlo", "efficiency_h"))
    cfg.efficiency_h = detail::parse_double(raw, "montecarlo", "efficiency_h", *v);

  // [crystal]
  if (const auto v = raw.get("crystal", "name")) cfg.crystal_name = *v;
  if (const auto v = raw.get("crystal", "pump_nm"))
    cfg.pump_nm = detail::parse_double(raw, "crystal", "pump_nm", *v);

  // [output]
  if (const auto v = raw.get("output", "path")) cfg.out_path = *v;

  return cfg;
}

}  // namespace eraser

#endif  // ERASER_CONFIG_HPP
