#ifndef ERASER_MONTECARLO_HPP
#define ERASER_MONTECARLO_HPP

#include <array>
#include <cstdint>
#include <numeric>

#include "eraser/analysis.hpp"
#include "eraser/protocol.hpp"

// Finite-count sampling of triple-coincidence experiments from exact Born
// probabilities, with independent Bernoulli detector thinning.
//
// Randomness is counter-based: each emission e draws from a SplitMix64
// stream seeded with mix(seed, e), so results are bitwise independent of
// iteration order and identical under any parallel execution plan.

namespace eraser {

namespace rng {

// SplitMix64 (Steele, Lea, Vigna); the fixed per-emission generator.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline SplitMix64 emission_stream(std::uint64_t seed, std::uint64_t emission_index) {
  // One scrambling round separates neighboring emission seeds.
  SplitMix64 s(seed ^ (emission_index * 0xD1B54A32D192ED03ull));
  s.state = s.next();
  return s;
}

}  // namespace rng

struct RunSpec {
  ExperimentConfig config;
  std::uint64_t n_triples = 1;
  double efficiency_A = 1.0;
  double efficiency_B = 1.0;
  double efficiency_H = 1.0;
  std::uint64_t seed = 0;
};

struct CountsTable {
  // counts[port][2*a + b], port 0 = Plus (or the single direct-detection
  // bin), outcome index 0 = transmitted (+).
  std::array<std::array<std::uint64_t, 4>, 2> counts{};
  std::uint64_t total_emitted = 0;
  std::uint64_t total_detected = 0;

  std::uint64_t port_total(HeraldPort port) const {
    const auto& c = counts[port == HeraldPort::Plus ? 0 : 1];
    return std::accumulate(c.begin(), c.end(), std::uint64_t{0});
  }
};

namespace detail {

// Joint 8-way outcome probabilities (port, A+-, B+-) of the GHZ source under
// the config, in the fixed cumulative order port+ first, then A+, then B+.
inline std::array<double, 8> joint_probabilities(const ExperimentConfig& config) {
  const PureState ghz = eraser::ghz_state();
  std::array<double, 8> p{};
  const bool direct = std::holds_alternative<DirectHerald>(config.herald);
  int k = 0;
  for (int port = 0; port < 2; ++port)
    for (double da : {0.0, M_PI / 2.0})
      for (double db : {0.0, M_PI / 2.0}) {
        ExperimentConfig c = config;
        c.alpha += da;
        c.beta += db;
        if (direct) {
          // H detected directly: one bin per (A,B) outcome, in port 0.
          p[k] = (port == 0) ? coincidence_probability(ghz, c) : 0.0;
        } else {
          p[k] = coincidence_probability(
              ghz, c, port == 0 ? HeraldPort::Plus : HeraldPort::Minus);
        }
        ++k;
      }
  return p;
}

}  // namespace detail

inline CountsTable sample_run(const RunSpec& spec) {
  if (spec.n_triples < 1) throw std::invalid_argument("n_triples must be >= 1");
  for (double eta : {spec.efficiency_A, spec.efficiency_B, spec.efficiency_H})
    if (!(eta > 0.0) || eta > 1.0)
      throw std::invalid_argument("detector efficiency must be in (0, 1]");
  const std::array<double, 8> p = detail::joint_probabilities(spec.config);
  std::array<double, 8> cumulative{};
  double acc = 0.0;
  for (int i = 0; i < 8; ++i) cumulative[i] = (acc += p[i]);

  CountsTable table;
  table.total_emitted = spec.n_triples;
  for (std::uint64_t e = 0; e < spec.n_triples; ++e) {
    rng::SplitMix64 stream = rng::emission_stream(spec.seed, e);
    const double u = stream.uniform() * acc;
    int outcome = 0;
    while (outcome < 7 && u >= cumulative[outcome]) ++outcome;
    const bool detected = stream.uniform() < spec.efficiency_A &&
                          stream.uniform() < spec.efficiency_B &&
                          stream.uniform() < spec.efficiency_H;
    if (!detected) continue;
    table.counts[outcome / 4][outcome % 4] += 1;
    table.total_detected += 1;
  }
  return table;
}

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

// p-hat of the (+,+) cell conditioned on the port, with binomial stderr.
inline Estimate estimate_coincidence_prob(const CountsTable& table, HeraldPort port) {
  const std::uint64_t n = table.port_total(port);
  if (n == 0) throw std::domain_error("no detected triples for the requested port");
  const double p =
      static_cast<double>(table.counts[port == HeraldPort::Plus ? 0 : 1][0]) /
      static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

namespace detail {

inline Estimate empirical_correlator(const CountsTable& t, HeraldPort port) {
  const auto& c = t.counts[port == HeraldPort::Plus ? 0 : 1];
  const double n = static_cast<double>(t.port_total(port));
  if (n == 0.0) throw std::domain_error("empty counts cell set for CHSH estimate");
  const double e =
      (static_cast<double>(c[0]) + static_cast<double>(c[3]) -
       static_cast<double>(c[1]) - static_cast<double>(c[2])) / n;
  return {e, std::sqrt(std::max(0.0, 1.0 - e * e) / n)};
}

}  // namespace detail

// S-hat = E(a,b) - E(a,b') + E(a',b) + E(a',b') from four runs sharing one
// conditioning port, with propagated binomial errors.
inline Estimate estimate_chsh(const CountsTable& ab, const CountsTable& ab_prime,
                              const CountsTable& a_prime_b,
                              const CountsTable& a_prime_b_prime, HeraldPort port) {
  const Estimate e1 = detail::empirical_correlator(ab, port);
  const Estimate e2 = detail::empirical_correlator(ab_prime, port);
  const Estimate e3 = detail::empirical_correlator(a_prime_b, port);
  const Estimate e4 = detail::empirical_correlator(a_prime_b_prime, port);
  const double s = std::abs(e1.value - e2.value + e3.value + e4.value);
  const double err = std::sqrt(e1.stderr_ * e1.stderr_ + e2.stderr_ * e2.stderr_ +
                               e3.stderr_ * e3.stderr_ + e4.stderr_ * e4.stderr_);
  return {s, err};
}

// Four sampled runs at the canonical CHSH settings, sharing a seed stream
// per setting (seed, seed+1, seed+2, seed+3).
inline Estimate sample_chsh(const ExperimentConfig& base, const ChshSettings& settings,
                            std::uint64_t n_per_setting, std::uint64_t seed,
                            HeraldPort port, double efficiency = 1.0) {
  std::array<CountsTable, 4> tables;
  const std::array<std::pair<double, double>, 4> pairs = {
      std::pair{settings.a, settings.b}, std::pair{settings.a, settings.b_prime},
      std::pair{settings.a_prime, settings.b},
      std::pair{settings.a_prime, settings.b_prime}};
  for (int i = 0; i < 4; ++i) {
    RunSpec spec;
    spec.config = base;
    spec.config.alpha = pairs[i].first;
    spec.config.beta = pairs[i].second;
    spec.n_triples = n_per_setting;
    spec.efficiency_A = spec.efficiency_B = spec.efficiency_H = efficiency;
    spec.seed = seed + static_cast<std::uint64_t>(i);
    tables[i] = sample_run(spec);
  }
  return estimate_chsh(tables[0], tables[1], tables[2], tables[3], port);
}

// Sampled two-photon tomography of a (pure or mixed) state: for each basis
// pair, n_per_setting emissions, 4-way outcome draw plus thinning on A and B.
inline TomographyTable sample_tomography(const DensityMatrix& rho,
                                         const TomographySettings& settings,
                                         std::uint64_t n_per_setting,
                                         std::uint64_t seed, double efficiency_A = 1.0,
                                         double efficiency_B = 1.0) {
  detail::require_two_photons(rho, "sample_tomography");
  const TomographyTable exact = simulate_tomography_probabilities(rho, settings);
  TomographyTable out{settings, {}};
  std::uint64_t setting_index = 0;
  for (const auto& p : exact.probabilities) {
    std::array<double, 4> cumulative{};
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) cumulative[i] = (acc += p[i]);
    std::array<std::uint64_t, 4> counts{};
    std::uint64_t detected = 0;
    for (std::uint64_t e = 0; e < n_per_setting; ++e) {
      rng::SplitMix64 stream =
          rng::emission_stream(seed + setting_index, e);
      const double u = stream.uniform() * acc;
      int outcome = 0;
      while (outcome < 3 && u >= cumulative[outcome]) ++outcome;
      if (stream.uniform() < efficiency_A && stream.uniform() < efficiency_B) {
        counts[outcome] += 1;
        detected += 1;
      }
    }
    std::array<double, 4> freq{};
    if (detected == 0) throw std::domain_error("no detected pairs in a tomography setting");
    for (int i = 0; i < 4; ++i)
      freq[i] = static_cast<double>(counts[i]) / static_cast<double>(detected);
    out.probabilities.push_back(freq);
    ++setting_index;
  }
  return out;
}

}  // namespace eraser

#endif  // ERASER_MONTECARLO_HPP
