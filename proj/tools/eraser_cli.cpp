// Command-line front end: phase matching, coincidence sweeps, CHSH values,
// tomography and Monte Carlo runs, driven by a sectioned config file.
//
// Exit codes: 0 success, 1 usage/config error, 2 domain "no solution".

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "eraser/analysis.hpp"
#include "eraser/config.hpp"
#include "eraser/montecarlo.hpp"
#include "eraser/optics.hpp"
#include "eraser/protocol.hpp"

#ifndef ERASER_DEFAULT_DATA_FILE
#define ERASER_DEFAULT_DATA_FILE "data/crystals.dat"
#endif

namespace {

using namespace eraser;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNoSolution = 2;

std::string crystal_data_path(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("ERASER_CRYSTAL_DATA")) return env;
  return ERASER_DEFAULT_DATA_FILE;
}

// 12 significant digits, '.' decimal, '\n' line endings: bit-exact output.
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path, std::ios::binary);  // binary keeps '\n' endings everywhere
  if (!file) throw std::runtime_error("cannot open output file: " + path);
  return file;
}

const char* port_name(HeraldPort p) { return p == HeraldPort::Plus ? "plus" : "minus"; }

std::string herald_name(const HeraldStrategy& h) {
  if (std::holds_alternative<DirectHerald>(h)) return "direct";
  if (std::holds_alternative<LinearPolarizerHerald>(h)) return "linear";
  return "circular";
}

// The A,B state selected by [experiment] state =. Port applies to "heralded".
DensityMatrix resolve_state(const RunConfig& cfg, HeraldPort port) {
  if (cfg.state == "phi_plus") return pure_to_density(bell_state(BellParity::Plus));
  if (cfg.state == "phi_minus") return pure_to_density(bell_state(BellParity::Minus));
  if (cfg.state == "xi_plus") return pure_to_density(xi_states().first);
  if (cfg.state == "xi_minus") return pure_to_density(xi_states().second);
  if (cfg.state == "mixture") return unconditioned_ab_density(ghz_state());
  if (std::holds_alternative<DirectHerald>(cfg.experiment.herald))
    return unconditioned_ab_density(ghz_state());
  return pure_to_density(herald_outcome(ghz_state(), cfg.experiment.herald, port).ab_state);
}

int cmd_phase_match(const std::string& data_flag, const std::string& crystal,
                    double pump_nm) {
  CrystalDatabase db = CrystalDatabase::load(crystal_data_path(data_flag));
  PhaseMatchProblem problem;
  try {
    problem.crystal = db.get(crystal);
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  problem.pump_wavelength_nm = pump_nm;
  double psi;
  try {
    psi = phase_match_angle(problem);
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoSolution;
  }
  const double residual = phase_match_residual(problem, psi);
  const double walkoff = walkoff_angle(problem.crystal, 3.0 * pump_nm, psi);
  std::cout << "psi_pm_deg=" << fmt(rad_to_deg(psi)) << " residual=" << fmt(residual)
            << " walkoff_deg=" << fmt(rad_to_deg(walkoff)) << "\n";
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, const std::string& out_override) {
  std::ofstream file;
  std::ostream& out = open_output(out_override.empty() ? cfg.out_path : out_override, file);
  const std::vector<double> alphas =
      cfg.alpha_sweep ? cfg.alpha_sweep->values_deg()
                      : std::vector<double>{rad_to_deg(cfg.experiment.alpha)};
  const std::vector<double> betas =
      cfg.beta_sweep ? cfg.beta_sweep->values_deg()
                     : std::vector<double>{rad_to_deg(cfg.experiment.beta)};
  const std::string herald = herald_name(cfg.experiment.herald);
  const bool direct = std::holds_alternative<DirectHerald>(cfg.experiment.herald);

  out << "alpha_deg,beta_deg,herald,port,p_coincidence\n";
  // Row-major over the sweep grid: alpha outer, beta inner, then port.
  for (double a : alphas)
    for (double b : betas) {
      ExperimentConfig ec = cfg.experiment;
      ec.alpha = deg_to_rad(a);
      ec.beta = deg_to_rad(b);
      if (direct) {
        const double p = coincidence_probability(unconditioned_ab_density(ghz_state()), ec);
        out << fmt(a) << ',' << fmt(b) << ',' << herald << ",none," << fmt(p) << "\n";
      } else {
        for (HeraldPort port : {HeraldPort::Plus, HeraldPort::Minus}) {
          const auto h = herald_outcome(ghz_state(), cfg.experiment.herald, port);
          const double p = coincidence_probability(h.ab_state, ec);
          out << fmt(a) << ',' << fmt(b) << ',' << herald << ',' << port_name(port)
              << ',' << fmt(p) << "\n";
        }
      }
    }
  return kExitOk;
}

int cmd_chsh(const RunConfig& cfg, std::uint64_t seed_override, bool has_seed) {
  const DensityMatrix rho = resolve_state(cfg, HeraldPort::Plus);
  const double s = chsh_value(rho, cfg.chsh, cfg.experiment);
  std::cout << "S_analytic=" << fmt(s) << "\n";
  if (cfg.has_montecarlo) {
    if (cfg.state != "heralded")
      throw std::runtime_error(
          "montecarlo CHSH samples the heralded source; remove experiment.state");
    const std::uint64_t seed = has_seed ? seed_override : cfg.seed;
    ExperimentConfig base = cfg.experiment;
    const Estimate est =
        sample_chsh(base, cfg.chsh, cfg.n, seed, HeraldPort::Plus, cfg.efficiency_a);
    std::cout << "S_sampled=" << fmt(est.value) << " stderr=" << fmt(est.stderr_)
              << " n_per_setting=" << cfg.n << " seed=" << seed << "\n";
  }
  return kExitOk;
}

int cmd_tomography(const RunConfig& cfg, const std::string& out_override,
                   std::uint64_t seed_override, bool has_seed) {
  const DensityMatrix truth = resolve_state(cfg, HeraldPort::Plus);
  const TomographySettings settings = TomographySettings::full();
  TomographyTable table;
  bool exact = !cfg.has_montecarlo;
  if (exact) {
    table = simulate_tomography_probabilities(truth, settings);
  } else {
    const std::uint64_t seed = has_seed ? seed_override : cfg.seed;
    table = sample_tomography(truth, settings, cfg.n, seed, cfg.efficiency_a,
                              cfg.efficiency_b);
  }
  const DensityMatrix rho = reconstruct_density(table, exact);

  std::ofstream file;
  std::ostream& out = open_output(out_override.empty() ? cfg.out_path : out_override, file);
  out << "row,col,re,im\n";
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      out << i << ',' << j << ',' << fmt(rho.entries()(i, j).real()) << ','
          << fmt(rho.entries()(i, j).imag()) << "\n";
  out << "# fidelity=" << fmt(fidelity(rho, truth))
      << " concurrence=" << fmt(concurrence(rho)) << "\n";
  return kExitOk;
}

int cmd_geometry(double phi, double d_mm, double lc_mm, double lw_mm, double ring,
                 double azimuth_deg) {
  const EmissionDirections dirs =
      emission_directions({phi, ring, deg_to_rad(azimuth_deg)});
  std::cout << "herald=(" << fmt(dirs.herald.in_plane) << ','
            << fmt(dirs.herald.out_of_plane) << ")"
            << " o=(" << fmt(dirs.o.in_plane) << ',' << fmt(dirs.o.out_of_plane) << ")"
            << " o_prime=(" << fmt(dirs.o_prime.in_plane) << ','
            << fmt(dirs.o_prime.out_of_plane) << ")\n";
  const PumpDiameterVerdict verdict = pump_diameter_ok(d_mm, phi, lc_mm, lw_mm);
  std::cout << "pump_diameter_ok=" << (verdict.ok ? "true" : "false")
            << " margin_mm=" << fmt(verdict.margin_mm) << "\n";
  return kExitOk;
}

int cmd_montecarlo(const RunConfig& cfg, std::uint64_t seed_override, bool has_seed) {
  if (!cfg.has_montecarlo)
    throw std::runtime_error("montecarlo command requires a [montecarlo] section");
  RunSpec spec;
  spec.config = cfg.experiment;
  spec.n_triples = cfg.n;
  spec.efficiency_A = cfg.efficiency_a;
  spec.efficiency_B = cfg.efficiency_b;
  spec.efficiency_H = cfg.efficiency_h;
  spec.seed = has_seed ? seed_override : cfg.seed;
  const CountsTable table = sample_run(spec);
  std::cout << "emitted=" << table.total_emitted << " detected=" << table.total_detected
            << "\n";
  static const char* outcome_names[4] = {"++", "+-", "-+", "--"};
  for (int port = 0; port < 2; ++port)
    for (int o = 0; o < 4; ++o)
      std::cout << "count[" << (port == 0 ? "plus" : "minus") << "][" << outcome_names[o]
                << "]=" << table.counts[port][o] << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heralded-pair polarization experiment simulator"};
  app.require_subcommand(1);

  std::string config_path, out_path, data_path;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "run configuration file");
  app.add_option("--out", out_path, "output file (default stdout)");
  app.add_option("--data", data_path, "crystal data file");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "Monte Carlo seed override");

  auto* pm = app.add_subcommand("phase-match", "solve the phase-matching angle");
  std::string crystal = "calcite";
  double pump_nm = 405.0;
  pm->add_option("crystal", crystal, "crystal name from the data file");
  pm->add_option("pump_nm", pump_nm, "pump wavelength, nm");

  auto* sweep = app.add_subcommand("sweep", "coincidence-probability sweep, CSV");
  auto* chsh = app.add_subcommand("chsh", "analytic (and sampled) CHSH value");
  auto* tomo = app.add_subcommand("tomography", "two-photon state reconstruction, CSV");
  auto* mc = app.add_subcommand("montecarlo", "sampled triple-coincidence counts");

  auto* geom = app.add_subcommand("geometry", "emission directions and pump bound");
  double phi = 0.05, d_mm = 2.0, lc_mm = 15.0, lw_mm = 5.0, ring = 0.0, azimuth_deg = 0.0;
  geom->add_option("--phi", phi, "herald angle, rad");
  geom->add_option("--d", d_mm, "pump beam diameter, mm");
  geom->add_option("--lc", lc_mm, "crystal length, mm");
  geom->add_option("--lw", lw_mm, "waveplate length, mm");
  geom->add_option("--ring", ring, "ring opening angle, rad");
  geom->add_option("--azimuth", azimuth_deg, "ring azimuth, degrees");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (pm->parsed()) return cmd_phase_match(data_path, crystal, pump_nm);
    if (geom->parsed()) return cmd_geometry(phi, d_mm, lc_mm, lw_mm, ring, azimuth_deg);

    if (config_path.empty())
      throw std::runtime_error("this subcommand requires --config <path>");
    const RunConfig cfg = load_run_config(config_path);
    const bool has_seed = seed_opt->count() > 0;
    if (sweep->parsed()) return cmd_sweep(cfg, out_path);
    if (chsh->parsed()) return cmd_chsh(cfg, seed, has_seed);
    if (tomo->parsed()) return cmd_tomography(cfg, out_path, seed, has_seed);
    if (mc->parsed()) return cmd_montecarlo(cfg, seed, has_seed);
    throw std::runtime_error("no subcommand");
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoSolution;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
