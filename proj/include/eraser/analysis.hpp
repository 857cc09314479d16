#ifndef ERASER_ANALYSIS_HPP
#define ERASER_ANALYSIS_HPP

#include <algorithm>
#include <array>
#include <vector>

#include "eraser/protocol.hpp"
#include "eraser/quantum.hpp"

// Entanglement and nonlocality diagnostics for two-photon states:
// Wootters concurrence, CHSH correlators, linear-inversion tomography,
// Uhlmann fidelity.

namespace eraser {

namespace detail {

inline void require_two_photons(const DensityMatrix& rho, const char* fn) {
  if (rho.n_photons() != 2)
    throw std::invalid_argument(std::string(fn) + " expects a 2-photon density matrix");
}

inline Eigen::Matrix2cd pauli_y() {
  Eigen::Matrix2cd sy;
  sy << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return sy;
}

}  // namespace detail

// Wootters concurrence: C = max(0, l1 - l2 - l3 - l4) where l_i are the
// square roots of the eigenvalues of rho (sy x sy) rho* (sy x sy), sorted
// descending.
inline double concurrence(const DensityMatrix& rho) {
  detail::require_two_photons(rho, "concurrence");
  const Eigen::Matrix2cd sy = detail::pauli_y();
  Matrix yy = Matrix::Zero(4, 4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      yy.block(i * 2, j * 2, 2, 2) = sy(i, j) * sy;
  // The Wootters lambdas are the singular values of sqrt(rho) Y conj(sqrt(rho))
  // with Y = sy (x) sy: that matrix times its adjoint is similar to rho rho~.
  // Computing them as singular values instead of sqrt(eigenvalues) avoids the
  // square-root blowup of rounding noise near zero; eigenvalues of rho below
  // 1e-13 are clamped to zero for the same reason.
  Eigen::SelfAdjointEigenSolver<Matrix> rho_es(rho.entries());
  Eigen::VectorXd ev = rho_es.eigenvalues().cwiseMax(0.0);
  for (int i = 0; i < 4; ++i)
    if (ev(i) < 1e-13) ev(i) = 0.0;
  const Matrix sqrt_rho = rho_es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
                          rho_es.eigenvectors().adjoint();
  Eigen::JacobiSVD<Matrix> svd(sqrt_rho * yy * sqrt_rho.conjugate());
  std::array<double, 4> l{};
  for (int i = 0; i < 4; ++i) l[i] = svd.singularValues()(i);
  std::sort(l.begin(), l.end(), std::greater<>());
  return std::max(0.0, l[0] - l[1] - l[2] - l[3]);
}

inline double concurrence(const PureState& s) { return concurrence(pure_to_density(s)); }

namespace detail {

// Transmit/reflect probabilities at (alpha or alpha+90, beta or beta+90),
// honoring the config's quarter-wave plates.
inline std::array<double, 4> outcome_probabilities(const DensityMatrix& rho,
                                                   const ExperimentConfig& base,
                                                   double alpha, double beta) {
  std::array<double, 4> p{};
  int k = 0;
  for (double da : {0.0, M_PI / 2.0})
    for (double db : {0.0, M_PI / 2.0}) {
      ExperimentConfig c = base;
      c.alpha = alpha + da;
      c.beta = beta + db;
      p[k++] = coincidence_probability(rho, c);
    }
  return p;  // {++, +-, -+, --}
}

}  // namespace detail

// E = P++ + P-- - P+- - P-+ with analyzers at (alpha, beta) and their
// orthogonal complements. The base config contributes only the optional
// waveplates; its alpha/beta are overridden.
inline double correlation_E(const DensityMatrix& rho, double alpha, double beta,
                            const ExperimentConfig& base = {}) {
  detail::require_two_photons(rho, "correlation_E");
  const auto p = detail::outcome_probabilities(rho, base, alpha, beta);
  return p[0] + p[3] - p[1] - p[2];
}

inline double correlation_E(const PureState& s, double alpha, double beta,
                            const ExperimentConfig& base = {}) {
  return correlation_E(pure_to_density(s), alpha, beta, base);
}

struct ChshSettings {
  double a, a_prime, b, b_prime;  // radians
};

inline double chsh_value(const DensityMatrix& rho, const ChshSettings& s,
                         const ExperimentConfig& base = {}) {
  return std::abs(correlation_E(rho, s.a, s.b, base) -
                  correlation_E(rho, s.a, s.b_prime, base) +
                  correlation_E(rho, s.a_prime, s.b, base) +
                  correlation_E(rho, s.a_prime, s.b_prime, base));
}

inline double chsh_value(const PureState& s, const ChshSettings& settings,
                         const ExperimentConfig& base = {}) {
  return chsh_value(pure_to_density(s), settings, base);
}

struct ChshMaximum {
  double value;
  ChshSettings settings;
};

// Maximize S over the four analyzer settings: coarse grid (1 degree default)
// over (b, b'), with a, a' chosen optimally in closed form from the planar
// correlation matrix, then pattern-search refinement of all four angles to
// well below 0.01 degrees.
inline ChshMaximum maximize_chsh(const DensityMatrix& rho,
                                 const ExperimentConfig& base = {},
                                 double coarse_step_deg = 1.0) {
  detail::require_two_photons(rho, "maximize_chsh");
  // E(a,b) = u(a)^T K u(b) with u(t) = (cos 2t, sin 2t); K built from the
  // difference operators M(t) = P(t) - P(t+90) on each side.
  auto side_ops = [](std::optional<double> qwp) {
    Eigen::Matrix2cd mz, mx;
    mz << 1, 0, 0, -1;                  // M(0)
    mx << 0, 1, 1, 0;                   // M(45)
    if (qwp) {
      const Eigen::Matrix2cd u = waveplate(WaveplateKind::Quarter, *qwp);
      mz = u.adjoint() * mz * u;
      mx = u.adjoint() * mx * u;
    }
    return std::array<Eigen::Matrix2cd, 2>{mz, mx};
  };
  const auto a_ops = side_ops(base.qwp_A);
  const auto b_ops = side_ops(base.qwp_B);
  Eigen::Matrix2d K;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Matrix full = Matrix::Zero(4, 4);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
          full.block(r * 2, c * 2, 2, 2) = a_ops[i](r, c) * b_ops[j];
      K(i, j) = (full * rho.entries()).trace().real();
    }
  const auto u2 = [](double t) { return Eigen::Vector2d(std::cos(2 * t), std::sin(2 * t)); };

  // Coarse scan: for fixed (b, b') the optimal a, a' align with
  // K u(b) -/+ K u(b'), giving S = |K u(b) - K u(b')| + |K u(b) + K u(b')|.
  const double step = coarse_step_deg * M_PI / 180.0;
  double best = -1.0;
  double best_b = 0.0, best_bp = 0.0;
  for (double b = 0.0; b < M_PI; b += step)
    for (double bp = 0.0; bp < M_PI; bp += step) {
      const Eigen::Vector2d vb = K * u2(b), vbp = K * u2(bp);
      const double s = (vb - vbp).norm() + (vb + vbp).norm();
      if (s > best) {
        best = s;
        best_b = b;
        best_bp = bp;
      }
    }
  auto angle_of = [](const Eigen::Vector2d& v) { return 0.5 * std::atan2(v(1), v(0)); };
  const Eigen::Vector2d vb = K * u2(best_b), vbp = K * u2(best_bp);
  ChshSettings s{angle_of(vb - vbp), angle_of(vb + vbp), best_b, best_bp};

  auto eval = [&](const ChshSettings& st) {
    const auto S = [&](double a, double b) { return u2(a).dot(K * u2(b)); };
    return std::abs(S(st.a, st.b) - S(st.a, st.b_prime) + S(st.a_prime, st.b) +
                    S(st.a_prime, st.b_prime));
  };
  double value = eval(s);
  // Coordinate pattern search, halving the step down to ~1e-9 rad.
  for (double h = step; h > 1e-9;) {
    bool improved = false;
    double* coords[4] = {&s.a, &s.a_prime, &s.b, &s.b_prime};
    for (double* c : coords)
      for (double d : {h, -h}) {
        *c += d;
        const double v = eval(s);
        if (v > value) {
          value = v;
          improved = true;
        } else {
          *c -= d;
        }
      }
    if (!improved) h /= 2.0;
  }
  return {value, s};
}

// --- Tomography -----------------------------------------------------------

enum class TomoBasis { Linear, Diagonal, Circular };  // {x,y}, {+45,-45}, {R,L}

struct TomographySettings {
  std::vector<std::pair<TomoBasis, TomoBasis>> bases;

  // The informationally complete default: all 9 basis pairs.
  static TomographySettings full() {
    TomographySettings t;
    for (TomoBasis a : {TomoBasis::Linear, TomoBasis::Diagonal, TomoBasis::Circular})
      for (TomoBasis b : {TomoBasis::Linear, TomoBasis::Diagonal, TomoBasis::Circular})
        t.bases.emplace_back(a, b);
    return t;
  }
};

namespace detail {

// The two orthonormal kets of a tomography basis. |R> = (|x> - i|y>)/sqrt(2).
inline std::array<Eigen::Vector2cd, 2> basis_kets(TomoBasis b) {
  const double r = 1.0 / std::sqrt(2.0);
  switch (b) {
    case TomoBasis::Linear:
      return {Eigen::Vector2cd(1, 0), Eigen::Vector2cd(0, 1)};
    case TomoBasis::Diagonal:
      return {Eigen::Vector2cd(r, r), Eigen::Vector2cd(r, -r)};
    case TomoBasis::Circular:
      return {Eigen::Vector2cd(r, Complex(0, -r)), Eigen::Vector2cd(r, Complex(0, r))};
  }
  throw std::logic_error("unreachable");
}

inline void require_complete(const TomographySettings& settings) {
  bool seen[3][3] = {};
  for (auto [a, b] : settings.bases) seen[static_cast<int>(a)][static_cast<int>(b)] = true;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (!seen[i][j])
        throw std::invalid_argument("tomography settings are not informationally complete");
}

inline Matrix pair_projector(const Eigen::Vector2cd& ka, const Eigen::Vector2cd& kb) {
  const Eigen::Matrix2cd pa = ka * ka.adjoint();
  const Eigen::Matrix2cd pb = kb * kb.adjoint();
  Matrix full(4, 4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      full.block(i * 2, j * 2, 2, 2) = pa(i, j) * pb;
  return full;
}

}  // namespace detail

struct TomographyTable {
  TomographySettings settings;
  // probabilities[k][o] = outcome o (2x2, index = 2*oa + ob) of basis pair k.
  std::vector<std::array<double, 4>> probabilities;
};

inline TomographyTable simulate_tomography_probabilities(
    const DensityMatrix& rho, const TomographySettings& settings) {
  detail::require_two_photons(rho, "simulate_tomography_probabilities");
  detail::require_complete(settings);
  TomographyTable table{settings, {}};
  for (auto [ba, bb] : settings.bases) {
    const auto ka = detail::basis_kets(ba);
    const auto kb = detail::basis_kets(bb);
    std::array<double, 4> p{};
    for (int oa = 0; oa < 2; ++oa)
      for (int ob = 0; ob < 2; ++ob) {
        const Matrix proj = detail::pair_projector(ka[oa], kb[ob]);
        p[2 * oa + ob] = std::clamp((proj * rho.entries()).trace().real(), 0.0, 1.0);
      }
    table.probabilities.push_back(p);
  }
  return table;
}

// Linear inversion: least-squares solve of Tr(Pi_k rho) = p_k over all 36
// outcome projectors, then Hermitize, clip tiny negative eigenvalues
// (threshold 1e-6) and renormalize.
inline DensityMatrix reconstruct_density(const TomographyTable& table,
                                         bool exact_mode = true) {
  detail::require_complete(table.settings);
  if (table.probabilities.size() != table.settings.bases.size())
    throw std::invalid_argument("tomography table size mismatch");
  if (exact_mode) {
    for (const auto& p : table.probabilities) {
      const double sum = p[0] + p[1] + p[2] + p[3];
      if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument(
            "inconsistent tomography table: basis probabilities sum to " +
            std::to_string(sum));
    }
  }
  const int rows = static_cast<int>(table.probabilities.size()) * 4;
  Matrix design(rows, 16);
  Eigen::VectorXd p(rows);
  int r = 0;
  for (size_t k = 0; k < table.settings.bases.size(); ++k) {
    const auto [ba, bb] = table.settings.bases[k];
    const auto ka = detail::basis_kets(ba);
    const auto kb = detail::basis_kets(bb);
    for (int oa = 0; oa < 2; ++oa)
      for (int ob = 0; ob < 2; ++ob) {
        const Matrix proj = detail::pair_projector(ka[oa], kb[ob]);
        // Tr(P rho) = sum_ij conj(P(i,j))... P is Hermitian: Tr(P rho) =
        // sum_ij P(j,i) rho(i,j); flatten rho column-major.
        for (int j = 0; j < 4; ++j)
          for (int i = 0; i < 4; ++i) design(r, j * 4 + i) = proj(j, i);
        p(r) = table.probabilities[k][2 * oa + ob];
        ++r;
      }
  }
  const Vector vec = design.colPivHouseholderQr().solve(p.cast<Complex>());
  Matrix rho(4, 4);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) rho(i, j) = vec(j * 4 + i);
  rho = (rho + rho.adjoint()).eval() / 2.0;

  Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
  const double min_ev = es.eigenvalues().minCoeff();
  // Exact input must be physical to rounding; sampled counts are allowed the
  // O(1/sqrt(n)) negative excursions of linear inversion.
  const double clip_limit = exact_mode ? 1e-6 : 0.05;
  if (min_ev < -clip_limit)
    throw std::domain_error("reconstructed matrix strongly non-positive (min eigenvalue " +
                            std::to_string(min_ev) + ")");
  if (min_ev < 0.0) {
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    ev /= ev.sum();
    rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  }
  rho /= rho.trace().real();
  return DensityMatrix(2, std::move(rho));
}

// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim())
    throw std::invalid_argument("fidelity: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.entries());
  if (es.eigenvalues().minCoeff() < -1e-8)
    throw std::invalid_argument("fidelity: non-PSD input");
  const Matrix sqrt_rho = es.eigenvectors() *
                          es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                          es.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Matrix> inner(sqrt_rho * sigma.entries() * sqrt_rho);
  const double tr = inner.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(tr * tr, 0.0, 1.0);
}

inline double fidelity(const DensityMatrix& rho, const PureState& s) {
  return fidelity(rho, pure_to_density(s));
}

}  // namespace eraser

#endif  // ERASER_ANALYSIS_HPP
