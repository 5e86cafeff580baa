#pragma once

// Lossless beam splitter on two field modes. Creation operators map as
//   a1^dag -> t b1^dag + i r b2^dag,   a2^dag -> i r* b1^dag + t* b2^dag
// so reflection picks up a factor i.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "ramseylab/errors.hpp"
#include "ramseylab/fock.hpp"

namespace ramseylab {

struct BeamSplitterConfig {
  cplx r{0.0, 0.0};
  cplx t{1.0, 0.0};

  static BeamSplitterConfig from_reflectivity(double reflectivity) {
    if (!(reflectivity >= 0.0 && reflectivity <= 1.0)) throw InvalidArgument("reflectivity must lie in [0, 1]");
    return {{std::sqrt(reflectivity), 0.0}, {std::sqrt(1.0 - reflectivity), 0.0}};
  }

  // The splitter that undoes this one.
  BeamSplitterConfig inverse() const { return {-r, std::conj(t)}; }

  void validate() const {
    if (std::abs(std::norm(r) + std::norm(t) - 1.0) > 1e-12) throw InvalidArgument("beam splitter needs |r|^2 + |t|^2 = 1");
  }
};

namespace detail {

inline std::vector<double> factorial_roots(std::size_t n) {
  std::vector<double> f(n + 1, 1.0);
  for (std::size_t k = 1; k <= n; ++k) f[k] = f[k - 1] * std::sqrt(static_cast<double>(k));
  return f;
}

inline double binomial(std::size_t n, std::size_t k) {
  double b = 1.0;
  for (std::size_t j = 1; j <= k; ++j) b = b * static_cast<double>(n - k + j) / static_cast<double>(j);
  return b;
}

}  // namespace detail

// Expands (t b1^dag + i r b2^dag)^n (i r* b1^dag + t* b2^dag)^mu for every
// input |n, mu>. The output keeps the input truncation.
inline FieldState bs_apply(const FieldState& in, const BeamSplitterConfig& bs) {
  bs.validate();
  const std::size_t n1 = in.dim(0), n2 = in.dim(1);
  const auto sq = detail::factorial_roots(n1 + n2);
  const cplx ir = kI * bs.r, irc = kI * std::conj(bs.r), tc = std::conj(bs.t);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n1 * n2));
  for (std::size_t n = 0; n < n1; ++n)
    for (std::size_t mu = 0; mu < n2; ++mu) {
      const cplx amp = in(n, mu);
      if (amp == cplx{0.0, 0.0}) continue;
      const double norm = 1.0 / (sq[n] * sq[mu]);
      // j of the n first-mode photons stay in mode 1, k of the mu second-mode photons move to mode 1.
      for (std::size_t j = 0; j <= n; ++j)
        for (std::size_t k = 0; k <= mu; ++k) {
          const cplx c = detail::binomial(n, j) * detail::binomial(mu, k) * std::pow(bs.t, static_cast<int>(j)) *
                         std::pow(ir, static_cast<int>(n - j)) * std::pow(irc, static_cast<int>(k)) *
                         std::pow(tc, static_cast<int>(mu - k));
          if (c == cplx{0.0, 0.0}) continue;
          const std::size_t p = j + k, q = (n - j) + (mu - k);
          if (p >= n1 || q >= n2) {
            throw TruncationOverflow("beam splitter output |" + std::to_string(p) + "," + std::to_string(q) +
                                     "> does not fit the truncation");
          }
          out[static_cast<Eigen::Index>(p * n2 + q)] += amp * c * norm * sq[p] * sq[q];
        }
    }
  return FieldState({n1, n2}, std::move(out));
}

// <a1^dag a2> on the splitter output for |1,1> in.
inline cplx bs_cross_correlation(const BeamSplitterConfig& bs) {
  return cross_expectation(bs_apply(tensor(make_fock(1, 3), make_fock(1, 3)), bs));
}

// The closed form -2i(|t|^2 - |r|^2)|r||t| usually quoted for the same quantity.
// It keeps only the <2,0| ... |1,1> link and is not what bs_cross_correlation returns.
inline cplx bs_cross_correlation_quoted(const BeamSplitterConfig& bs) {
  bs.validate();
  return -2.0 * kI * (std::norm(bs.t) - std::norm(bs.r)) * std::abs(bs.r) * std::abs(bs.t);
}

}  // namespace ramseylab
