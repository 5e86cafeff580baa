#pragma once

// Truncated Fock-space state algebra.
//
// Pure states are amplitude tensors over a fixed list of subsystems, stored
// row-major (last index fastest). The library uses four ranks:
//
//   ModeState     (n)                 one cavity mode
//   FieldState    (n, mu)             both cavity modes
//   JointState    (atom, n, mu)       atom plus both modes
//   TwoAtomState  (atom1, atom2, n, mu)
//
// Atom levels are indexed |g> = 0, |e> = 1.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ramseylab/errors.hpp"

namespace ramseylab {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

// Norm-squared slack allowed above 1 for any stored state.
inline constexpr double kNormTolerance = 1e-12;

enum class Level : std::size_t { ground = 0, excited = 1 };

inline Level other(Level l) { return l == Level::ground ? Level::excited : Level::ground; }

inline const char* to_string(Level l) { return l == Level::ground ? "g" : "e"; }

template <std::size_t Rank>
class PureState {
 public:
  static_assert(Rank >= 1);
  using Dims = std::array<std::size_t, Rank>;
  using Index = std::array<std::size_t, Rank>;

  explicit PureState(const Dims& dims) : dims_(dims), amps_(Eigen::VectorXcd::Zero(product(dims))) {}

  PureState(const Dims& dims, Eigen::VectorXcd amps) : dims_(dims), amps_(std::move(amps)) {
    if (static_cast<std::size_t>(amps_.size()) != product(dims_)) {
      throw InvalidArgument("amplitude count does not match subsystem dimensions");
    }
    const double n2 = amps_.squaredNorm();
    if (!std::isfinite(n2)) throw NumericalError("state has non-finite amplitudes");
    if (n2 > 1.0 + kNormTolerance) {
      throw InvalidArgument("state is super-normalized (norm^2 = " + std::to_string(n2) + ")");
    }
  }

  const Dims& dims() const { return dims_; }
  std::size_t dim(std::size_t k) const { return dims_.at(k); }
  std::size_t size() const { return static_cast<std::size_t>(amps_.size()); }
  const Eigen::VectorXcd& amplitudes() const { return amps_; }

  std::size_t flat_index(const Index& idx) const {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < Rank; ++k) {
      if (idx[k] >= dims_[k]) throw OutOfRange("basis index outside truncation");
      flat = flat * dims_[k] + idx[k];
    }
    return flat;
  }

  Index unflatten(std::size_t flat) const {
    Index idx{};
    for (std::size_t k = Rank; k-- > 0;) {
      idx[k] = flat % dims_[k];
      flat /= dims_[k];
    }
    return idx;
  }

  cplx at(const Index& idx) const { return amps_[static_cast<Eigen::Index>(flat_index(idx))]; }

  template <class... I>
    requires(sizeof...(I) == Rank)
  cplx operator()(I... idx) const {
    return at(Index{static_cast<std::size_t>(idx)...});
  }

  // Amplitude or zero when any index falls outside the truncation (negative
  // indices included). Closed-form sums lean on this.
  cplx amplitude_or_zero(const std::array<long, Rank>& idx) const {
    Index u{};
    for (std::size_t k = 0; k < Rank; ++k) {
      if (idx[k] < 0 || static_cast<std::size_t>(idx[k]) >= dims_[k]) return {0.0, 0.0};
      u[k] = static_cast<std::size_t>(idx[k]);
    }
    return at(u);
  }

  double norm_squared() const { return amps_.squaredNorm(); }

  PureState normalized() const {
    const double n = amps_.norm();
    if (n == 0.0) throw ZeroProbability("cannot normalize a zero vector");
    return PureState(dims_, amps_ / n);
  }

  // Scales an arbitrary nonzero vector to unit norm.
  static PureState from_unnormalized(const Dims& dims, const Eigen::VectorXcd& amps) {
    const double n = amps.norm();
    if (!std::isfinite(n)) throw NumericalError("state has non-finite amplitudes");
    if (n == 0.0) throw ZeroProbability("cannot normalize a zero vector");
    return PureState(dims, amps / n);
  }

  static std::size_t product(const Dims& d) {
    std::size_t p = 1;
    for (auto x : d) {
      if (x == 0) throw InvalidArgument("subsystem dimension must be >= 1");
      p *= x;
    }
    return p;
  }

 private:
  Dims dims_;
  Eigen::VectorXcd amps_;
};

using ModeState = PureState<1>;
using FieldState = PureState<2>;
using JointState = PureState<3>;
using TwoAtomState = PureState<4>;

// Atomic qubit amplitudes, also used as a detection basis vector.
struct AtomAmplitudes {
  cplx ground{1.0, 0.0};
  cplx excited{0.0, 0.0};

  static AtomAmplitudes in(Level l) {
    return l == Level::ground ? AtomAmplitudes{{1.0, 0.0}, {0.0, 0.0}} : AtomAmplitudes{{0.0, 0.0}, {1.0, 0.0}};
  }

  cplx operator[](Level l) const { return l == Level::ground ? ground : excited; }

  double norm_squared() const { return std::norm(ground) + std::norm(excited); }

  void require_normalized(const char* what = "atom amplitudes") const {
    if (std::abs(norm_squared() - 1.0) > 1e-12) {
      throw InvalidArgument(std::string(what) + " must satisfy |c_g|^2 + |c_e|^2 = 1");
    }
  }
};

// ---------------------------------------------------------------------------
// Construction

inline ModeState make_fock(std::size_t n, std::size_t dim) {
  if (n >= dim) throw OutOfRange("Fock level " + std::to_string(n) + " outside truncation " + std::to_string(dim));
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
  a[static_cast<Eigen::Index>(n)] = 1.0;
  return ModeState({dim}, std::move(a));
}

struct CoherentState {
  ModeState state;
  // Poisson weight lying at or above the truncation, before renormalization.
  double leakage;
};

// |alpha> truncated to `dim` levels and renormalized. The weight dropped by
// the truncation is reported so callers can assert it against a budget.
inline CoherentState make_coherent(cplx alpha, std::size_t dim) {
  if (dim == 0) throw InvalidArgument("truncation must be >= 1");
  const double mean = std::norm(alpha);
  Eigen::VectorXcd a(static_cast<Eigen::Index>(dim));
  cplx term = std::exp(-0.5 * mean);  // alpha^n e^{-|alpha|^2/2} / sqrt(n!)
  for (std::size_t n = 0; n < dim; ++n) {
    a[static_cast<Eigen::Index>(n)] = term;
    term *= alpha / std::sqrt(static_cast<double>(n + 1));
  }
  // Tail summed directly; 1 - (kept weight) would cancel catastrophically.
  double leakage = 0.0;
  double p = std::norm(term);
  for (std::size_t n = dim; n < dim + 100000; ++n) {
    leakage += p;
    p *= mean / static_cast<double>(n + 1);
    if (p < 1e-300 || (n > static_cast<std::size_t>(mean) && p < leakage * 1e-18)) break;
  }
  const double kept = a.norm();
  if (kept == 0.0) throw NumericalError("coherent amplitude underflow; |alpha| too large");
  return {ModeState({dim}, a / kept), leakage};
}

// (|0> + alpha|1>) / sqrt(1 + |alpha|^2)
inline ModeState make_zero_one(cplx alpha, std::size_t dim = 2) {
  if (dim < 2) throw InvalidArgument("zero-one state needs truncation >= 2");
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
  const double s = 1.0 / std::sqrt(1.0 + std::norm(alpha));
  a[0] = s;
  a[1] = alpha * s;
  return ModeState({dim}, std::move(a));
}

inline FieldState tensor(const ModeState& m1, const ModeState& m2) {
  const auto n1 = m1.dim(0), n2 = m2.dim(0);
  Eigen::VectorXcd a(static_cast<Eigen::Index>(n1 * n2));
  for (std::size_t n = 0; n < n1; ++n)
    for (std::size_t mu = 0; mu < n2; ++mu)
      a[static_cast<Eigen::Index>(n * n2 + mu)] = m1.amplitudes()[static_cast<Eigen::Index>(n)] *
                                                  m2.amplitudes()[static_cast<Eigen::Index>(mu)];
  return FieldState({n1, n2}, std::move(a));
}

inline JointState tensor(const AtomAmplitudes& atom, const FieldState& field) {
  const auto nf = static_cast<Eigen::Index>(field.size());
  Eigen::VectorXcd a(2 * nf);
  a.head(nf) = atom.ground * field.amplitudes();
  a.tail(nf) = atom.excited * field.amplitudes();
  return JointState({2, field.dim(0), field.dim(1)}, std::move(a));
}

inline JointState tensor(const AtomAmplitudes& atom, const ModeState& m1, const ModeState& m2) {
  return tensor(atom, tensor(m1, m2));
}

// Field amplitudes sitting on one atomic level (unnormalized).
inline FieldState field_component(const JointState& s, Level l) {
  const auto nf = static_cast<Eigen::Index>(s.dim(1) * s.dim(2));
  return FieldState({s.dim(1), s.dim(2)}, s.amplitudes().segment(static_cast<Eigen::Index>(l) * nf, nf));
}

// Amplitude list over a two-mode truncation; entries outside are rejected.
inline FieldState field_from_amplitudes(std::size_t n1, std::size_t n2,
                                        const std::vector<std::pair<std::array<std::size_t, 2>, cplx>>& entries) {
  FieldState zero({n1, n2});
  Eigen::VectorXcd a = zero.amplitudes();
  for (const auto& [idx, value] : entries) a[static_cast<Eigen::Index>(zero.flat_index(idx))] += value;
  return FieldState({n1, n2}, std::move(a));
}

// ---------------------------------------------------------------------------
// Density matrices

class DensityMatrix {
 public:
  DensityMatrix(std::vector<std::size_t> dims, Eigen::MatrixXcd elements)
      : dims_(std::move(dims)), m_(std::move(elements)) {
    std::size_t p = 1;
    for (auto d : dims_) {
      if (d == 0) throw InvalidArgument("subsystem dimension must be >= 1");
      p *= d;
    }
    if (m_.rows() != m_.cols() || static_cast<std::size_t>(m_.rows()) != p) {
      throw InvalidArgument("density matrix shape does not match subsystem dimensions");
    }
  }

  const std::vector<std::size_t>& dims() const { return dims_; }
  const Eigen::MatrixXcd& matrix() const { return m_; }
  std::size_t size() const { return static_cast<std::size_t>(m_.rows()); }
  cplx operator()(std::size_t i, std::size_t j) const {
    return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  double trace() const { return m_.trace().real(); }

  // Hermitian within 1e-10, trace in [0, 1 + 1e-10], eigenvalues >= -1e-10.
  void validate(double tol = 1e-10) const {
    if (!m_.allFinite()) throw NumericalError("density matrix has non-finite entries");
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > tol) throw InvalidArgument("density matrix is not Hermitian");
    const double tr = trace();
    if (tr < -tol || tr > 1.0 + tol) throw InvalidArgument("density matrix trace outside [0, 1]");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol) throw InvalidArgument("density matrix is not positive semidefinite");
  }

 private:
  std::vector<std::size_t> dims_;
  Eigen::MatrixXcd m_;
};

template <std::size_t Rank>
DensityMatrix density_matrix(const PureState<Rank>& s) {
  return DensityMatrix(std::vector<std::size_t>(s.dims().begin(), s.dims().end()),
                       s.amplitudes() * s.amplitudes().adjoint());
}

namespace detail {

inline std::vector<std::size_t> checked_keep(std::vector<std::size_t> keep, std::size_t rank) {
  if (keep.empty()) throw InvalidArgument("partial trace must keep at least one subsystem");
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end()) {
    throw InvalidArgument("duplicate subsystem in partial-trace selector");
  }
  if (keep.back() >= rank) throw InvalidArgument("partial-trace selector names a missing subsystem");
  return keep;
}

// Splits every flat index into (kept flat index, traced flat index).
struct Split {
  std::vector<std::size_t> kept_dims;
  std::size_t kept_size = 1;
  std::size_t traced_size = 1;
  std::vector<std::size_t> kept_of;
  std::vector<std::size_t> traced_of;
};

inline Split split_indices(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& keep) {
  Split sp;
  std::vector<bool> is_kept(dims.size(), false);
  for (auto k : keep) is_kept[k] = true;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (is_kept[k]) {
      sp.kept_dims.push_back(dims[k]);
      sp.kept_size *= dims[k];
    } else {
      sp.traced_size *= dims[k];
    }
  }
  const std::size_t total = sp.kept_size * sp.traced_size;
  sp.kept_of.resize(total);
  sp.traced_of.resize(total);
  std::vector<std::size_t> digit(dims.size());
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (std::size_t k = dims.size(); k-- > 0;) {
      digit[k] = rem % dims[k];
      rem /= dims[k];
    }
    std::size_t kf = 0, tf = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      if (is_kept[k])
        kf = kf * dims[k] + digit[k];
      else
        tf = tf * dims[k] + digit[k];
    }
    sp.kept_of[flat] = kf;
    sp.traced_of[flat] = tf;
  }
  return sp;
}

}  // namespace detail

// Reduced state on the listed subsystems (indices into the state's dims).
template <std::size_t Rank>
DensityMatrix partial_trace(const PureState<Rank>& s, std::vector<std::size_t> keep) {
  keep = detail::checked_keep(std::move(keep), Rank);
  const std::vector<std::size_t> dims(s.dims().begin(), s.dims().end());
  const auto sp = detail::split_indices(dims, keep);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(sp.kept_size),
                                              static_cast<Eigen::Index>(sp.traced_size));
  for (std::size_t f = 0; f < s.size(); ++f) {
    m(static_cast<Eigen::Index>(sp.kept_of[f]), static_cast<Eigen::Index>(sp.traced_of[f])) =
        s.amplitudes()[static_cast<Eigen::Index>(f)];
  }
  return DensityMatrix(sp.kept_dims, m * m.adjoint());
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, std::vector<std::size_t> keep) {
  keep = detail::checked_keep(std::move(keep), rho.dims().size());
  const auto sp = detail::split_indices(rho.dims(), keep);
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(sp.kept_size),
                                              static_cast<Eigen::Index>(sp.kept_size));
  const std::size_t n = rho.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (sp.traced_of[i] == sp.traced_of[j])
        r(static_cast<Eigen::Index>(sp.kept_of[i]), static_cast<Eigen::Index>(sp.kept_of[j])) += rho(i, j);
  return DensityMatrix(sp.kept_dims, std::move(r));
}

enum class Subsystem { atom, mode1, mode2, mode_pair };

inline DensityMatrix partial_trace(const JointState& s, Subsystem which) {
  switch (which) {
    case Subsystem::atom: return partial_trace(s, {0});
    case Subsystem::mode1: return partial_trace(s, {1});
    case Subsystem::mode2: return partial_trace(s, {2});
    case Subsystem::mode_pair: return partial_trace(s, {1, 2});
  }
  throw InvalidArgument("unknown subsystem selector");
}

inline DensityMatrix partial_trace(const FieldState& s, Subsystem which) {
  switch (which) {
    case Subsystem::mode1: return partial_trace(s, {0});
    case Subsystem::mode2: return partial_trace(s, {1});
    case Subsystem::mode_pair: return density_matrix(s);
    case Subsystem::atom: break;
  }
  throw InvalidArgument("field state has no atom subsystem");
}

inline double purity(const DensityMatrix& rho) { return (rho.matrix() * rho.matrix()).trace().real(); }

// Von Neumann entropy in nats. Eigenvalues below 1e-14 are dropped.
inline double entropy(const DensityMatrix& rho) {
  if (std::abs(rho.trace() - 1.0) > 1e-9) throw InvalidArgument("entropy needs a unit-trace density matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.matrix(), Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double l = es.eigenvalues()[k];
    if (l >= 1e-14) s -= l * std::log(l);
  }
  return s;
}

inline Eigen::VectorXd eigenvalues(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

template <std::size_t Rank>
double fidelity(const PureState<Rank>& a, const PureState<Rank>& b) {
  if (a.dims() != b.dims()) throw InvalidArgument("fidelity between states of different shape");
  const double na = a.norm_squared(), nb = b.norm_squared();
  if (na == 0.0 || nb == 0.0) throw InvalidArgument("fidelity with a zero-norm state");
  return std::norm(a.amplitudes().dot(b.amplitudes())) / (na * nb);
}

// <psi|rho|psi> / <psi|psi>
template <std::size_t Rank>
double fidelity(const DensityMatrix& rho, const PureState<Rank>& psi) {
  if (rho.size() != psi.size()) throw InvalidArgument("fidelity between objects of different shape");
  const double n = psi.norm_squared();
  if (n == 0.0) throw InvalidArgument("fidelity with a zero-norm state");
  return (psi.amplitudes().adjoint() * rho.matrix() * psi.amplitudes())(0, 0).real() / n;
}

// <a1^dag a2>: sum over links (n, mu) -> (n+1, mu-1) weighted by sqrt((n+1) mu).
inline cplx cross_expectation(const FieldState& s) {
  cplx acc{0.0, 0.0};
  const auto n1 = s.dim(0), n2 = s.dim(1);
  for (std::size_t n = 0; n + 1 < n1; ++n)
    for (std::size_t mu = 1; mu < n2; ++mu)
      acc += std::conj(s(n + 1, mu - 1)) * s(n, mu) * std::sqrt(static_cast<double>((n + 1) * mu));
  return acc;
}

inline cplx cross_expectation(const DensityMatrix& rho) {
  if (rho.dims().size() != 2) throw InvalidArgument("cross expectation needs a two-mode density matrix");
  const auto n1 = rho.dims()[0], n2 = rho.dims()[1];
  // Tr(rho a1^dag a2) = sum <n,mu| rho |n+1,mu-1> sqrt((n+1) mu)
  cplx acc{0.0, 0.0};
  for (std::size_t n = 0; n + 1 < n1; ++n)
    for (std::size_t mu = 1; mu < n2; ++mu)
      acc += rho(n * n2 + mu, (n + 1) * n2 + (mu - 1)) * std::sqrt(static_cast<double>((n + 1) * mu));
  return acc;
}

// Photon-number distribution of one mode of a field state.
inline std::vector<double> photon_distribution(const FieldState& s, std::size_t mode) {
  if (mode > 1) throw InvalidArgument("mode index must be 0 or 1");
  std::vector<double> p(s.dim(mode), 0.0);
  for (std::size_t f = 0; f < s.size(); ++f) p[s.unflatten(f)[mode]] += std::norm(s.amplitudes()[static_cast<Eigen::Index>(f)]);
  return p;
}

}  // namespace ramseylab
