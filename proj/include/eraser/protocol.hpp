#ifndef ERASER_PROTOCOL_HPP
#define ERASER_PROTOCOL_HPP

#include <optional>
#include <utility>
#include <variant>

#include "eraser/quantum.hpp"

// States and coincidence statistics of the heralded-pair protocol: the GHZ
// source, the herald measurement strategies, and the closed-form probability
// curves used as oracles.
//
// Herald encoding: |1>_H = |y>, |0>_H = |x>. This is forced by the fact that
// a herald analyzer at 90 degrees (y) must select the |x_A x_B> branch.

namespace eraser {

struct DirectHerald {};
struct LinearPolarizerHerald {
  double gamma;  // analyzer angle from the x axis, radians
};
struct CircularHerald {
  double qwp_axis;  // quarter-wave fast-axis angle, radians
  double gamma;     // polarizer angle after the plate, radians
};

using HeraldStrategy =
    std::variant<DirectHerald, LinearPolarizerHerald, CircularHerald>;

enum class HeraldPort { Plus, Minus };  // transmitted / reflected

struct ExperimentConfig {
  double alpha = 0.0;  // analyzer A, radians
  double beta = 0.0;   // analyzer B, radians
  std::optional<double> qwp_A;  // quarter-wave axis before analyzer A
  std::optional<double> qwp_B;
  HeraldStrategy herald = DirectHerald{};
};

enum class BellParity { Plus, Minus };

inline PureState bell_state(BellParity parity) {
  Vector v = Vector::Zero(4);
  v(0) = 1.0 / std::sqrt(2.0);
  v(3) = (parity == BellParity::Plus ? 1.0 : -1.0) / std::sqrt(2.0);
  return PureState(2, std::move(v));
}

// (1/sqrt(2))(|x_A x_B y_H> + |y_A y_B x_H>), photon order A, B, H.
inline PureState ghz_state() {
  Vector v = Vector::Zero(8);
  v(0b001) = 1.0 / std::sqrt(2.0);
  v(0b110) = 1.0 / std::sqrt(2.0);
  return PureState(3, std::move(v));
}

// (1/sqrt(2))(|xx> +/- i|yy>).
inline std::pair<PureState, PureState> xi_states() {
  Vector plus = Vector::Zero(4), minus = Vector::Zero(4);
  plus(0) = minus(0) = 1.0 / std::sqrt(2.0);
  plus(3) = Complex(0.0, 1.0 / std::sqrt(2.0));
  minus(3) = Complex(0.0, -1.0 / std::sqrt(2.0));
  return {PureState(2, std::move(plus)), PureState(2, std::move(minus))};
}

namespace detail {

// Effective herald analyzer bra for a port: the polarizer bra at gamma
// (transmitted) or gamma + pi/2 (reflected), composed with the quarter-wave
// unitary when present. Projecting onto <v|U is projecting onto the ket
// U^dag |v>.
inline Eigen::Vector2cd herald_bra(const HeraldStrategy& strategy, HeraldPort port) {
  if (std::holds_alternative<DirectHerald>(strategy))
    throw std::invalid_argument("direct herald detection has no port-resolved state");
  double gamma;
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  if (const auto* lp = std::get_if<LinearPolarizerHerald>(&strategy)) {
    gamma = lp->gamma;
  } else {
    const auto& ch = std::get<CircularHerald>(strategy);
    gamma = ch.gamma;
    u = waveplate(WaveplateKind::Quarter, ch.qwp_axis);
  }
  const double angle = (port == HeraldPort::Plus) ? gamma : gamma + M_PI / 2.0;
  return (polarizer_bra(angle).transpose() * u).transpose();
}

}  // namespace detail

struct HeraldedState {
  PureState ab_state;        // conditional 2-photon state on A, B
  double port_probability;   // probability of the herald firing this port
};

// Project photon H of a 3-photon state onto the given port's analyzer and
// renormalize. Port probabilities over {Plus, Minus} sum to 1.
inline HeraldedState herald_outcome(const PureState& state,
                                    const HeraldStrategy& strategy,
                                    HeraldPort port) {
  if (state.n_photons() != 3)
    throw std::invalid_argument("herald_outcome expects a 3-photon state");
  const Eigen::Vector2cd bra = detail::herald_bra(strategy, port);
  // Contract the H index (least significant bit) with the herald bra.
  Vector ab = Vector::Zero(4);
  for (int i = 0; i < 4; ++i)
    ab(i) = bra(0) * state.amplitude(2 * i) + bra(1) * state.amplitude(2 * i + 1);
  const double p = ab.squaredNorm();
  if (p < 1e-14) throw std::domain_error("impossible herald outcome");
  ab /= std::sqrt(p);
  return {PureState(2, std::move(ab)), p};
}

namespace detail {

// Rank-1 joint projector for transmission at both analyzers, with optional
// quarter-wave plates folded into the analyzer bras.
inline Eigen::Vector4cd ab_bra(const ExperimentConfig& config) {
  Eigen::Vector2cd bra_a = polarizer_bra(config.alpha);
  Eigen::Vector2cd bra_b = polarizer_bra(config.beta);
  if (config.qwp_A)
    bra_a = (bra_a.transpose() * waveplate(WaveplateKind::Quarter, *config.qwp_A))
                .transpose();
  if (config.qwp_B)
    bra_b = (bra_b.transpose() * waveplate(WaveplateKind::Quarter, *config.qwp_B))
                .transpose();
  Eigen::Vector4cd bra;
  bra << bra_a(0) * bra_b(0), bra_a(0) * bra_b(1), bra_a(1) * bra_b(0),
      bra_a(1) * bra_b(1);
  return bra;
}

}  // namespace detail

// Joint transmission probability at A and B for a 2-photon state. For a
// 3-photon state the herald is handled per the config's strategy: Direct
// traces H out (sums over H outcomes); polarizer strategies require a port
// and give the joint triple-coincidence probability.
inline double coincidence_probability(const PureState& state,
                                      const ExperimentConfig& config,
                                      std::optional<HeraldPort> port = {}) {
  const Eigen::Vector4cd ab = detail::ab_bra(config);
  if (state.n_photons() == 2) {
    Complex amp = 0.0;
    for (int i = 0; i < 4; ++i) amp += ab(i) * state.amplitude(i);
    return std::norm(amp);
  }
  if (state.n_photons() != 3)
    throw std::invalid_argument("coincidence_probability expects 2 or 3 photons");
  if (std::holds_alternative<DirectHerald>(config.herald)) {
    // Incoherent sum over the two H outcomes of any complete H basis.
    double p = 0.0;
    for (int h = 0; h < 2; ++h) {
      Complex amp = 0.0;
      for (int i = 0; i < 4; ++i) amp += ab(i) * state.amplitude(2 * i + h);
      p += std::norm(amp);
    }
    return p;
  }
  if (!port)
    throw std::invalid_argument(
        "port-resolved herald strategy requires a herald port");
  const Eigen::Vector2cd hb = detail::herald_bra(config.herald, *port);
  Complex amp = 0.0;
  for (int i = 0; i < 4; ++i)
    amp += ab(i) * (hb(0) * state.amplitude(2 * i) + hb(1) * state.amplitude(2 * i + 1));
  return std::norm(amp);
}

inline double coincidence_probability(const DensityMatrix& rho,
                                      const ExperimentConfig& config) {
  if (rho.n_photons() != 2)
    throw std::invalid_argument("density-matrix coincidence expects 2 photons");
  const Eigen::Vector4cd bra = detail::ab_bra(config);
  const Eigen::Vector4cd ket = bra.conjugate();
  const double p = (bra.transpose() * rho.entries() * ket)(0, 0).real();
  return std::clamp(p, 0.0, 1.0);
}

// A,B statistics when the herald is detected directly: partial trace over H.
inline DensityMatrix unconditioned_ab_density(const PureState& ghz) {
  if (ghz.n_photons() != 3)
    throw std::invalid_argument("unconditioned_ab_density expects a 3-photon state");
  return partial_trace(pure_to_density(ghz), {0, 1});
}

// P++ for the separable mixture: cos^2(a) cos^2(b)/2 + sin^2(a) sin^2(b)/2.
inline double eq4_closed_form(double alpha, double beta) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  return 0.5 * (ca * ca * cb * cb + sa * sa * sb * sb);
}

// Same curve written as the parity-resolved average:
// (cos^2(a-b)/2 + cos^2(a+b)/2)/2.
inline double eq7_closed_form(double alpha, double beta) {
  const double cm = std::cos(alpha - beta), cp = std::cos(alpha + beta);
  return 0.5 * (0.5 * cm * cm + 0.5 * cp * cp);
}

// P++ for a parity-plus Bell pair: cos^2(a-b)/2.
inline double bell_closed_form(double alpha, double beta) {
  const double c = std::cos(alpha - beta);
  return 0.5 * c * c;
}

}  // namespace eraser

#endif  // ERASER_PROTOCOL_HPP
