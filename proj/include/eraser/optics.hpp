#ifndef ERASER_OPTICS_HPP
#define ERASER_OPTICS_HPP

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Uniaxial crystal optics: Sellmeier index evaluation, the collinear
// degenerate third-harmonic-splitting phase-matching condition, the paraxial
// emission geometry, the pump-diameter indistinguishability bound and e-ray
// walk-off.
//
// Data file wavelengths are in micrometers (Sellmeier convention); the API
// takes nanometers. Angles are radians.

namespace eraser {

// n^2(lambda) = A + sum_i B_i lambda^2 / (lambda^2 - C_i), lambda in um.
struct SellmeierCoefficients {
  double a = 0.0;
  std::vector<std::pair<double, double>> terms;  // (B_i, C_i)
  double range_min_um = 0.0;
  double range_max_um = 0.0;

  double evaluate(double wavelength_um) const {
    if (wavelength_um < range_min_um || wavelength_um > range_max_um)
      throw std::out_of_range("wavelength " + std::to_string(wavelength_um) +
                              " um outside Sellmeier validity range [" +
                              std::to_string(range_min_um) + ", " +
                              std::to_string(range_max_um) + "]");
    const double l2 = wavelength_um * wavelength_um;
    double n2 = a;
    for (auto [b, c] : terms) n2 += b * l2 / (l2 - c);
    if (!(n2 > 1.0) || !(n2 < 9.0))
      throw std::domain_error("Sellmeier evaluation gave unphysical n^2 = " +
                              std::to_string(n2));
    return std::sqrt(n2);
  }
};

enum class UniaxialSign { Negative, Positive };
enum class RayType { Ordinary, ExtraordinaryPrincipal };

struct UniaxialCrystal {
  std::string name;
  SellmeierCoefficients ordinary;
  SellmeierCoefficients extraordinary;
  UniaxialSign sign = UniaxialSign::Negative;
};

inline double refractive_index(const UniaxialCrystal& crystal, double wavelength_nm,
                               RayType ray) {
  const double um = wavelength_nm * 1e-3;
  return ray == RayType::Ordinary ? crystal.ordinary.evaluate(um)
                                  : crystal.extraordinary.evaluate(um);
}

// Extraordinary index at propagation angle psi from the optical axis:
// 1/n^2(psi) = cos^2(psi)/n_o^2 + sin^2(psi)/n_e^2.
inline double index_at_angle(double n_o, double n_e, double psi) {
  if (!(n_o > 1.0) || !(n_e > 1.0))
    throw std::invalid_argument("index_at_angle expects indices > 1");
  if (psi < 0.0 || psi > M_PI / 2.0)
    throw std::invalid_argument("psi must be in [0, pi/2]");
  const double c = std::cos(psi), s = std::sin(psi);
  return 1.0 / std::sqrt(c * c / (n_o * n_o) + s * s / (n_e * n_e));
}

struct PhaseMatchProblem {
  UniaxialCrystal crystal;
  double pump_wavelength_nm = 405.0;
  // Degenerate e -> (o, o', e): daughter wavelength is 3 * pump and one
  // daughter shares the pump's extraordinary character.
};

// Solve 3 n_e(psi; pump) - n_e(psi; daughter) - 2 n_o(daughter) = 0 by
// bracketing bisection on [0, pi/2]. Deterministic; residual < 1e-12.
inline double phase_match_angle(const PhaseMatchProblem& problem) {
  const double lp = problem.pump_wavelength_nm;
  const double ld = 3.0 * lp;
  const auto& c = problem.crystal;
  const double no_p = refractive_index(c, lp, RayType::Ordinary);
  const double ne_p = refractive_index(c, lp, RayType::ExtraordinaryPrincipal);
  const double no_d = refractive_index(c, ld, RayType::Ordinary);
  const double ne_d = refractive_index(c, ld, RayType::ExtraordinaryPrincipal);
  const auto f = [&](double psi) {
    return 3.0 * index_at_angle(no_p, ne_p, psi) - index_at_angle(no_d, ne_d, psi) -
           2.0 * no_d;
  };
  double lo = 0.0, hi = M_PI / 2.0;
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw std::domain_error("no phase matching: momentum mismatch has no root on [0, pi/2]");
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  // Polish with a few secant steps to push the residual to rounding level.
  double x0 = lo, x1 = hi;
  for (int i = 0; i < 8; ++i) {
    const double f0 = f(x0), f1 = f(x1);
    if (f1 == f0) break;
    const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    if (!(x2 > 0.0 && x2 < M_PI / 2.0)) break;
    x0 = x1;
    x1 = x2;
  }
  return std::abs(f(x1)) <= std::abs(f(0.5 * (lo + hi))) ? x1 : 0.5 * (lo + hi);
}

inline double phase_match_residual(const PhaseMatchProblem& problem, double psi) {
  const double lp = problem.pump_wavelength_nm;
  const double ld = 3.0 * lp;
  const auto& c = problem.crystal;
  return 3.0 * index_at_angle(refractive_index(c, lp, RayType::Ordinary),
                              refractive_index(c, lp, RayType::ExtraordinaryPrincipal), psi) -
         index_at_angle(refractive_index(c, ld, RayType::Ordinary),
                        refractive_index(c, ld, RayType::ExtraordinaryPrincipal), psi) -
         2.0 * refractive_index(c, ld, RayType::Ordinary);
}

// --- Emission geometry ------------------------------------------------------

inline constexpr double kParaxialLimit = 0.3;  // rad

struct EmissionGeometry {
  double herald_angle = 0.0;    // phi: herald external angle from the pump, > 0
  double ring_parameter = 0.0;  // opening angle of the o,o' pair about the axis
  double azimuth = 0.0;         // ring azimuth measured from the principal plane
};

struct TransverseAngle {
  double in_plane = 0.0;       // component in the principal plane
  double out_of_plane = 0.0;   // component normal to it

  double magnitude() const { return std::hypot(in_plane, out_of_plane); }
};

struct EmissionDirections {
  TransverseAngle herald;  // at +phi in the principal plane
  TransverseAngle o;       // ordinary daughter at azimuth + pi about the axis
  TransverseAngle o_prime; // fixed by transverse momentum conservation
};

// Paraxial three-daughter geometry: the herald at transverse angle phi, the
// symmetry axis at -phi/2, and the o, o' pair diametrically opposite on the
// ring of the given opening angle around the axis. o' is computed as
// -(herald + o) so the transverse sum is exactly zero.
inline EmissionDirections emission_directions(const EmissionGeometry& geom) {
  if (!(geom.herald_angle > 0.0))
    throw std::invalid_argument("herald angle must be positive");
  if (geom.ring_parameter < 0.0)
    throw std::invalid_argument("ring parameter must be nonnegative");
  EmissionDirections d;
  d.herald = {geom.herald_angle, 0.0};
  const double axis = -geom.herald_angle / 2.0;
  d.o = {axis - geom.ring_parameter * std::cos(geom.azimuth),
         -geom.ring_parameter * std::sin(geom.azimuth)};
  d.o_prime = {-d.herald.in_plane - d.o.in_plane,
               -d.herald.out_of_plane - d.o.out_of_plane};
  for (const TransverseAngle& t : {d.herald, d.o, d.o_prime})
    if (t.magnitude() >= kParaxialLimit)
      throw std::domain_error("non-paraxial emission direction (|angle| >= 0.3 rad)");
  return d;
}

struct PumpDiameterVerdict {
  bool ok = false;
  double margin_mm = 0.0;  // d - phi (l_c + l_w)
};

// Indistinguishability bound d > phi (l_c + l_w); strict inequality.
inline PumpDiameterVerdict pump_diameter_ok(double d_mm, double phi,
                                            double crystal_length_mm,
                                            double waveplate_length_mm) {
  if (!(d_mm > 0.0) || !(phi > 0.0) || !(crystal_length_mm > 0.0) ||
      !(waveplate_length_mm > 0.0))
    throw std::invalid_argument("pump_diameter_ok requires positive inputs");
  const double bound = phi * (crystal_length_mm + waveplate_length_mm);
  return {d_mm > bound, d_mm - bound};
}

// Standard uniaxial e-ray walk-off magnitude:
// tan(rho) = (n^2(psi)/2) (1/n_e^2 - 1/n_o^2) sin(2 psi).
inline double walkoff_angle(const UniaxialCrystal& crystal, double wavelength_nm,
                            double psi) {
  if (psi < 0.0 || psi > M_PI / 2.0)
    throw std::invalid_argument("psi must be in [0, pi/2]");
  const double n_o = refractive_index(crystal, wavelength_nm, RayType::Ordinary);
  const double n_e =
      refractive_index(crystal, wavelength_nm, RayType::ExtraordinaryPrincipal);
  const double n = index_at_angle(n_o, n_e, psi);
  return std::abs(std::atan(0.5 * n * n * (1.0 / (n_e * n_e) - 1.0 / (n_o * n_o)) *
                            std::sin(2.0 * psi)));
}

// --- Crystal data file -------------------------------------------------------
//
// Line-oriented format, '#' comments, one crystal per block:
//
//   crystal: calcite
//   sign: negative
//   ordinary: A=... B=... C=... [B=... C=...]* range=min:max
//   extraordinary: ...
//
// Malformed records are hard errors naming the line number.

namespace detail {

inline SellmeierCoefficients parse_sellmeier(const std::string& body, int line_no) {
  SellmeierCoefficients coeffs;
  std::istringstream iss(body);
  std::string tok;
  bool have_a = false, have_range = false;
  double pending_b = 0.0;
  bool b_pending = false;
  while (iss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("crystal data line " + std::to_string(line_no) +
                               ": expected key=value, got '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    try {
      if (key == "A") {
        coeffs.a = std::stod(val);
        have_a = true;
      } else if (key == "B") {
        if (b_pending)
          throw std::runtime_error("B without matching C");
        pending_b = std::stod(val);
        b_pending = true;
      } else if (key == "C") {
        if (!b_pending)
          throw std::runtime_error("C without preceding B");
        coeffs.terms.emplace_back(pending_b, std::stod(val));
        b_pending = false;
      } else if (key == "range") {
        const auto colon = val.find(':');
        if (colon == std::string::npos) throw std::runtime_error("range needs min:max");
        coeffs.range_min_um = std::stod(val.substr(0, colon));
        coeffs.range_max_um = std::stod(val.substr(colon + 1));
        have_range = true;
      } else {
        throw std::runtime_error("unknown key '" + key + "'");
      }
    } catch (const std::runtime_error&) {
      throw;
    } catch (const std::exception&) {
      throw std::runtime_error("crystal data line " + std::to_string(line_no) +
                               ": bad number in '" + tok + "'");
    }
  }
  if (!have_a || !have_range || coeffs.terms.empty() || b_pending)
    throw std::runtime_error("crystal data line " + std::to_string(line_no) +
                             ": incomplete Sellmeier record");
  if (coeffs.range_min_um <= 0.0 || coeffs.range_max_um <= coeffs.range_min_um)
    throw std::runtime_error("crystal data line " + std::to_string(line_no) +
                             ": invalid wavelength range");
  return coeffs;
}

}  // namespace detail

class CrystalDatabase {
 public:
  static CrystalDatabase load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open crystal data file: " + path);
    CrystalDatabase db;
    UniaxialCrystal current;
    bool open = false, have_o = false, have_e = false, have_sign = false;
    int line_no = 0;
    std::string line;
    auto finish = [&] {
      if (!open) return;
      if (!have_o || !have_e || !have_sign)
        throw std::runtime_error("crystal '" + current.name +
                                 "' is missing sign or index records");
      db.validate_and_insert(current);
      open = have_o = have_e = have_sign = false;
      current = {};
    };
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream iss(line);
      std::string head;
      if (!(iss >> head)) continue;
      std::string rest;
      std::getline(iss, rest);
      if (head == "crystal:") {
        finish();
        std::istringstream name(rest);
        if (!(name >> current.name))
          throw std::runtime_error("crystal data line " + std::to_string(line_no) +
                                   ": crystal record needs a name");
        open = true;
      } else if (!open) {
        throw std::runtime_error("crystal data line " + std::to_string(line_no) +
                                 ": record outside a crystal block");
      } else if (head == "sign:") {
        std::istringstream v(rest);
        std::string s;
        v >> s;
        if (s == "negative")
          current.sign = UniaxialSign::Negative;
        else if (s == "positive")
          current.sign = UniaxialSign::Positive;
        else
          throw std::runtime_error("crystal data line " + std::to_string(line_no) +
                                   ": sign must be negative or positive");
        have_sign = true;
      } else if (head == "ordinary:") {
        current.ordinary = detail::parse_sellmeier(rest, line_no);
        have_o = true;
      } else if (head == "extraordinary:") {
        current.extraordinary = detail::parse_sellmeier(rest, line_no);
        have_e = true;
      } else {
        throw std::runtime_error("crystal data line " + std::to_string(line_no) +
                                 ": unknown record '" + head + "'");
      }
    }
    finish();
    if (db.crystals_.empty())
      throw std::runtime_error("crystal data file has no crystals: " + path);
    return db;
  }

  const UniaxialCrystal& get(const std::string& name) const {
    const auto it = crystals_.find(name);
    if (it == crystals_.end())
      throw std::out_of_range("unknown crystal '" + name + "'");
    return it->second;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : crystals_) out.push_back(k);
    return out;
  }

 private:
  void validate_and_insert(const UniaxialCrystal& c) {
    // Negative uniaxial entries must satisfy n_e < n_o over the shared range.
    if (c.sign == UniaxialSign::Negative) {
      const double lo = std::max(c.ordinary.range_min_um, c.extraordinary.range_min_um);
      const double hi = std::min(c.ordinary.range_max_um, c.extraordinary.range_max_um);
      for (int i = 0; i <= 64; ++i) {
        const double l = lo + (hi - lo) * i / 64.0;
        if (!(c.extraordinary.evaluate(l) < c.ordinary.evaluate(l)))
          throw std::runtime_error("crystal '" + c.name +
                                   "' marked negative uniaxial but n_e >= n_o at " +
                                   std::to_string(l) + " um");
      }
    }
    crystals_[c.name] = c;
  }

  std::map<std::string, UniaxialCrystal> crystals_;
};

}  // namespace eraser

#endif  // ERASER_OPTICS_HPP
