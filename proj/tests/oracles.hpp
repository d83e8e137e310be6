#pragma once

// Independent reference computations for the tests: dense full-space spin
// link evolution, naive partial trace, Taylor exponential.

#include <cmath>
#include <cstdint>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "qlink/spin_link.hpp"
#include "qlink/tensor.hpp"

namespace oracle {

using qlink::Complex;
using qlink::Matrix;

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Matrix pauli(char p) {
  Matrix m(2, 2);
  const Complex i(0, 1);
  switch (p) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, -i, i, 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: m.setIdentity();
  }
  return m;
}

// Single-spin operator at position q of `spins` (q = 0 leftmost).
inline Matrix on_spin(std::size_t spins, std::size_t q, const Matrix& op) {
  Matrix out = Matrix::Identity(1, 1);
  for (std::size_t s = 0; s < spins; ++s) out = kron(out, s == q ? op : Matrix::Identity(2, 2));
  return out;
}

// Σ (J/2)(XX + YY + ZZ) from Pauli products.
inline Matrix hamiltonian(const qlink::LinkModel& m) {
  const std::size_t spins = m.spins();
  Matrix h = Matrix::Zero(1 << spins, 1 << spins);
  for (std::size_t c = 0; c < m.chains; ++c) {
    for (std::size_t s = 0; s + 1 < m.sites; ++s) {
      const std::size_t q = c * m.sites + s;
      for (char p : {'X', 'Y', 'Z'}) {
        h += 0.5 * m.couplings[c][s] * on_spin(spins, q, pauli(p)) * on_spin(spins, q + 1, pauli(p));
      }
    }
  }
  return h;
}

inline Matrix expm(const Matrix& h, double t) { return (Complex(0, -t) * h).exp(); }

// Swap gate of register `reg` with the two spins at `site` (chain 0, chain 1)
// on the full 3^R ⊗ 2^spins space, written out index by index.
inline Matrix gate(const qlink::LinkModel& m, std::size_t registers, std::size_t reg, std::size_t site) {
  const std::size_t spins = m.spins();
  const std::size_t dm = std::size_t{1} << spins;
  std::size_t dr = 1;
  for (std::size_t r = 0; r < registers; ++r) dr *= 3;
  const std::size_t b0 = spins - 1 - site;            // chain 0 spin bit
  const std::size_t b1 = spins - 1 - (m.sites + site);  // chain 1 spin bit
  std::size_t stride = 1;
  for (std::size_t r = reg + 1; r < registers; ++r) stride *= 3;
  Matrix g = Matrix::Zero(dr * dm, dr * dm);
  for (std::size_t ri = 0; ri < dr; ++ri) {
    const std::size_t t = (ri / stride) % 3;
    for (std::size_t mi = 0; mi < dm; ++mi) {
      const bool up0 = (mi >> b0) & 1, up1 = (mi >> b1) & 1;
      std::size_t t2 = t, m2 = mi;
      if (t == 0 && !up0 && !up1) { t2 = 2; m2 = mi | (std::size_t{1} << b0); }
      else if (t == 1 && !up0 && !up1) { t2 = 2; m2 = mi | (std::size_t{1} << b1); }
      else if (t == 2 && up0 && !up1) { t2 = 0; m2 = mi & ~(std::size_t{1} << b0); }
      else if (t == 2 && !up0 && up1) { t2 = 1; m2 = mi & ~(std::size_t{1} << b1); }
      const std::size_t r2 = ri + (t2 - t) * stride;
      g(static_cast<Eigen::Index>(r2 * dm + m2), static_cast<Eigen::Index>(ri * dm + mi)) = 1.0;
    }
  }
  return g;
}

// W = Π_k [ (S_b e^{-iHτ})^{m_k} S_{a_k} ] on the full space.
inline Matrix full_w(const qlink::LinkModel& m, const std::vector<std::size_t>& budgets) {
  std::size_t n = budgets.size(), total = 0;
  for (auto b : budgets) total += b;
  const std::size_t regs = n + total;
  std::size_t dr = 1;
  for (std::size_t r = 0; r < regs; ++r) dr *= 3;
  const Matrix free = kron(Matrix::Identity(dr, dr), expm(hamiltonian(m), m.tau));
  Matrix w = Matrix::Identity(free.rows(), free.cols());
  std::size_t bob = n;
  for (std::size_t k = 0; k < n; ++k) {
    w = gate(m, regs, k, 0) * w;
    for (std::size_t j = 0; j < budgets[k]; ++j) w = gate(m, regs, bob++, m.sites - 1) * free * w;
  }
  return w;
}

// Σ_{i,j} over explicit index loops.
inline Matrix trace_middle_out(const Matrix& rho, std::size_t d0, std::size_t d1, std::size_t d2, bool keep_outer) {
  if (keep_outer) {
    Matrix out = Matrix::Zero(d0 * d2, d0 * d2);
    for (std::size_t a = 0; a < d0; ++a)
      for (std::size_t c = 0; c < d2; ++c)
        for (std::size_t a2 = 0; a2 < d0; ++a2)
          for (std::size_t c2 = 0; c2 < d2; ++c2)
            for (std::size_t b = 0; b < d1; ++b)
              out(a * d2 + c, a2 * d2 + c2) += rho((a * d1 + b) * d2 + c, (a2 * d1 + b) * d2 + c2);
    return out;
  }
  Matrix out = Matrix::Zero(d1, d1);
  for (std::size_t b = 0; b < d1; ++b)
    for (std::size_t b2 = 0; b2 < d1; ++b2)
      for (std::size_t a = 0; a < d0; ++a)
        for (std::size_t c = 0; c < d2; ++c) out(b, b2) += rho((a * d1 + b) * d2 + c, (a * d1 + b2) * d2 + c);
  return out;
}

inline Matrix taylor_exp(const Matrix& h, double t, int terms = 30) {
  const Matrix a = Complex(0, -t) * h;
  Matrix term = Matrix::Identity(h.rows(), h.cols()), sum = term;
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

// Single-use transfer probability through a 2-site chain with m Bob couplings.
inline double pi_two_site(double jt, std::size_t m) { return 1.0 - std::pow(std::cos(jt), 2.0 * m); }

// n + n1(1 − Π) with n1 = n log2 3 + log2(d²(d²+1)).
inline double first_round_rate(double n, double pi, double dm) {
  const double n1 = n * std::log2(3.0) + std::log2(dm * dm * (dm * dm + 1));
  return n / (n + n1 * (1 - pi));
}

}  // namespace oracle
