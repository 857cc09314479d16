#ifndef ERASER_QUANTUM_HPP
#define ERASER_QUANTUM_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <set>
#include <stdexcept>
#include <string>

// Exact linear-algebra engine for n-photon polarization states (n <= 4).
//
// Basis convention: photon 0 occupies the most significant bit of the basis
// index; within a photon, bit 0 = |x>, bit 1 = |y>. For 3-photon states the
// photon order is A, B, H. All angles are radians.
//
// All operations are pure functions on immutable values; safe to use from
// any number of threads.

namespace eraser {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr int kMaxPhotons = 4;
inline constexpr double kNormTol = 1e-12;

namespace detail {

inline int dim_of(int n_photons) { return 1 << n_photons; }

inline void check_photon_count(int n) {
  if (n < 1 || n > kMaxPhotons)
    throw std::invalid_argument("photon count must be in [1, " +
                                std::to_string(kMaxPhotons) + "], got " +
                                std::to_string(n));
}

}  // namespace detail

// Normalized pure polarization state of n_photons photons.
class PureState {
 public:
  PureState(int n_photons, Vector amplitudes)
      : n_photons_(n_photons), amps_(std::move(amplitudes)) {
    detail::check_photon_count(n_photons_);
    if (amps_.size() != detail::dim_of(n_photons_))
      throw std::invalid_argument("amplitude vector length " +
                                  std::to_string(amps_.size()) +
                                  " does not match 2^" +
                                  std::to_string(n_photons_));
    const double n = amps_.norm();
    if (std::abs(n - 1.0) > 1e-6)
      throw std::invalid_argument("state norm " + std::to_string(n) +
                                  " too far from 1 to renormalize");
    if (std::abs(n - 1.0) > kNormTol) amps_ /= n;
  }

  int n_photons() const { return n_photons_; }
  int dim() const { return static_cast<int>(amps_.size()); }
  const Vector& amplitudes() const { return amps_; }
  Complex amplitude(int basis_index) const { return amps_(basis_index); }

  // |<a|b>|, so equality up to global phase is overlap_mod == 1.
  double overlap_mod(const PureState& other) const {
    if (other.dim() != dim())
      throw std::invalid_argument("overlap of states with different photon counts");
    return std::abs(amps_.dot(other.amps_));
  }

 private:
  int n_photons_;
  Vector amps_;
};

// Hermitian, trace-1, positive-semidefinite matrix on n_photons photons.
class DensityMatrix {
 public:
  DensityMatrix(int n_photons, Matrix entries)
      : n_photons_(n_photons), m_(std::move(entries)) {
    detail::check_photon_count(n_photons_);
    const int d = detail::dim_of(n_photons_);
    if (m_.rows() != d || m_.cols() != d)
      throw std::invalid_argument("density matrix dimension mismatch");
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kNormTol)
      throw std::invalid_argument("density matrix is not Hermitian");
    if (std::abs(m_.trace().real() - 1.0) > kNormTol ||
        std::abs(m_.trace().imag()) > kNormTol)
      throw std::invalid_argument("density matrix trace is not 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw std::invalid_argument("density matrix has negative eigenvalue " +
                                  std::to_string(es.eigenvalues().minCoeff()));
  }

  int n_photons() const { return n_photons_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& entries() const { return m_; }

 private:
  int n_photons_;
  Matrix m_;
};

// General operator on the full n-photon space (projectors, waveplates, ...).
class LinearOperator {
 public:
  LinearOperator(int n_photons, Matrix entries)
      : n_photons_(n_photons), m_(std::move(entries)) {
    detail::check_photon_count(n_photons_);
    const int d = detail::dim_of(n_photons_);
    if (m_.rows() != d || m_.cols() != d)
      throw std::invalid_argument("operator dimension mismatch");
  }

  int n_photons() const { return n_photons_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& entries() const { return m_; }

  bool is_projector(double tol = 1e-10) const {
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol &&
           (m_ * m_ - m_).cwiseAbs().maxCoeff() <= tol;
  }

 private:
  int n_photons_;
  Matrix m_;
};

inline PureState tensor(const PureState& a, const PureState& b) {
  const int n = a.n_photons() + b.n_photons();
  if (n > kMaxPhotons)
    throw std::invalid_argument("tensor product exceeds " +
                                std::to_string(kMaxPhotons) + " photons");
  Vector out(a.dim() * b.dim());
  for (int i = 0; i < a.dim(); ++i)
    out.segment(i * b.dim(), b.dim()) = a.amplitude(i) * b.amplitudes();
  return PureState(n, std::move(out));
}

// Analyzer bra cos(angle)<x| + sin(angle)<y|.
inline Eigen::Vector2cd polarizer_bra(double angle) {
  if (!std::isfinite(angle)) throw std::invalid_argument("analyzer angle not finite");
  return {std::cos(angle), std::sin(angle)};
}

// |v><v| on photon_index, identity on every other photon.
inline LinearOperator projector_on_photon(const Eigen::Vector2cd& bra,
                                          int photon_index, int n_photons) {
  detail::check_photon_count(n_photons);
  if (photon_index < 0 || photon_index >= n_photons)
    throw std::out_of_range("photon index " + std::to_string(photon_index) +
                            " out of range for " + std::to_string(n_photons) +
                            " photons");
  const Eigen::Vector2cd ket = bra.conjugate();
  const Eigen::Matrix2cd p = ket * ket.adjoint();
  Matrix full = Matrix::Identity(1, 1);
  for (int k = 0; k < n_photons; ++k) {
    const Matrix& factor =
        (k == photon_index) ? static_cast<const Matrix&>(p.cast<Complex>())
                            : static_cast<const Matrix&>(Matrix::Identity(2, 2));
    Matrix next(full.rows() * 2, full.cols() * 2);
    for (int i = 0; i < full.rows(); ++i)
      for (int j = 0; j < full.cols(); ++j)
        next.block(i * 2, j * 2, 2, 2) = full(i, j) * factor;
    full = std::move(next);
  }
  return LinearOperator(n_photons, std::move(full));
}

enum class WaveplateKind { Half, Quarter };

// Jones retarder diag(1, e^{i delta}) in its own axes, conjugated by the
// rotation that brings the fast axis to axis_angle. delta = pi (half),
// pi/2 (quarter).
inline Eigen::Matrix2cd waveplate(WaveplateKind kind, double axis_angle) {
  const double delta = (kind == WaveplateKind::Half) ? M_PI : M_PI / 2.0;
  const double c = std::cos(axis_angle), s = std::sin(axis_angle);
  Eigen::Matrix2cd rot;
  rot << c, -s, s, c;
  Eigen::Matrix2cd ret = Eigen::Matrix2cd::Zero();
  ret(0, 0) = 1.0;
  ret(1, 1) = std::exp(Complex(0.0, delta));
  return rot * ret * rot.adjoint();
}

// Lift a single-photon unitary to the full space, acting on one photon.
inline LinearOperator single_photon_operator(const Eigen::Matrix2cd& u,
                                             int photon_index, int n_photons) {
  detail::check_photon_count(n_photons);
  if (photon_index < 0 || photon_index >= n_photons)
    throw std::out_of_range("photon index out of range");
  Matrix full = Matrix::Identity(1, 1);
  for (int k = 0; k < n_photons; ++k) {
    const Matrix factor = (k == photon_index) ? Matrix(u.cast<Complex>())
                                              : Matrix(Matrix::Identity(2, 2));
    Matrix next(full.rows() * 2, full.cols() * 2);
    for (int i = 0; i < full.rows(); ++i)
      for (int j = 0; j < full.cols(); ++j)
        next.block(i * 2, j * 2, 2, 2) = full(i, j) * factor;
    full = std::move(next);
  }
  return LinearOperator(n_photons, std::move(full));
}

// Raw matrix-vector product; the result is generally unnormalized.
inline Vector apply(const LinearOperator& op, const PureState& s) {
  if (op.dim() != s.dim())
    throw std::invalid_argument("operator/state dimension mismatch");
  return op.entries() * s.amplitudes();
}

inline double born_probability(const PureState& s, const LinearOperator& projector) {
  if (projector.dim() != s.dim())
    throw std::invalid_argument("projector/state dimension mismatch");
  if (!projector.is_projector())
    throw std::invalid_argument("born_probability requires an idempotent Hermitian projector");
  const double p =
      (s.amplitudes().adjoint() * projector.entries() * s.amplitudes())(0, 0).real();
  if (p < -kNormTol || p > 1.0 + kNormTol)
    throw std::logic_error("Born probability outside [0,1]: " + std::to_string(p));
  return std::clamp(p, 0.0, 1.0);
}

inline double born_probability(const DensityMatrix& rho, const LinearOperator& projector) {
  if (projector.dim() != rho.dim())
    throw std::invalid_argument("projector/state dimension mismatch");
  if (!projector.is_projector())
    throw std::invalid_argument("born_probability requires an idempotent Hermitian projector");
  const double p = (projector.entries() * rho.entries()).trace().real();
  return std::clamp(p, 0.0, 1.0);
}

struct MeasurementResult {
  PureState state;
  double probability;
};

inline MeasurementResult project_and_renormalize(const PureState& s,
                                                 const LinearOperator& projector) {
  const double p = born_probability(s, projector);
  if (p < 1e-14) throw std::domain_error("impossible outcome: projection probability ~ 0");
  Vector v = projector.entries() * s.amplitudes();
  v /= v.norm();
  return {PureState(s.n_photons(), std::move(v)), p};
}

inline DensityMatrix pure_to_density(const PureState& s) {
  Matrix m = s.amplitudes() * s.amplitudes().adjoint();
  return DensityMatrix(s.n_photons(), std::move(m));
}

// Trace out every photon not in `keep`. Kept photons retain their relative
// order (and the MSB-first bit convention).
inline DensityMatrix partial_trace(const DensityMatrix& rho,
                                   const std::set<int>& keep) {
  const int n = rho.n_photons();
  if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set");
  for (int k : keep)
    if (k < 0 || k >= n) throw std::out_of_range("partial_trace: photon index out of range");
  const int nk = static_cast<int>(keep.size());
  const int dk = detail::dim_of(nk);
  const int nt = n - nk;
  const int dt = 1 << nt;

  // Bit position of photon p in an n-photon index (photon 0 is the MSB).
  auto bit_of = [n](int p) { return n - 1 - p; };
  std::vector<int> keep_bits, traced_bits;
  for (int p = 0; p < n; ++p)
    (keep.count(p) ? keep_bits : traced_bits).push_back(bit_of(p));

  auto full_index = [&](int kept, int traced) {
    int idx = 0;
    for (int i = 0; i < nk; ++i)
      if (kept & (1 << (nk - 1 - i))) idx |= 1 << keep_bits[i];
    for (int i = 0; i < nt; ++i)
      if (traced & (1 << (nt - 1 - i))) idx |= 1 << traced_bits[i];
    return idx;
  };

  Matrix out = Matrix::Zero(dk, dk);
  for (int i = 0; i < dk; ++i)
    for (int j = 0; j < dk; ++j)
      for (int t = 0; t < dt; ++t)
        out(i, j) += rho.entries()(full_index(i, t), full_index(j, t));
  return DensityMatrix(nk, std::move(out));
}

inline PureState basis_state(int n_photons, int index) {
  Vector v = Vector::Zero(detail::dim_of(n_photons));
  v(index) = 1.0;
  return PureState(n_photons, std::move(v));
}

}  // namespace eraser

#endif  // ERASER_QUANTUM_HPP
