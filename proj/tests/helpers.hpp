#pragma once

#include <random>

#include "qsim/fockspace.hpp"

namespace testing {

using qsim::fock::cplx;
using qsim::fock::DenseMatrix;
using qsim::fock::Vector;

inline Vector random_vector(std::mt19937& rng, int dim) {
  std::normal_distribution<double> g;
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = cplx(g(rng), g(rng));
  return v;
}

inline qsim::fock::Ket random_ket(std::mt19937& rng, qsim::fock::SpaceTag tag) {
  return qsim::fock::Ket::normalized(tag, random_vector(rng, tag.dim()));
}

/// Mixture of `rank` random pure states with random weights.
inline qsim::fock::DensityMatrix random_density(std::mt19937& rng, qsim::fock::SpaceTag tag, int rank = 3) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  DenseMatrix m = DenseMatrix::Zero(tag.dim(), tag.dim());
  double total = 0.0;
  for (int k = 0; k < rank; ++k) {
    const double w = u(rng);
    const Vector v = random_ket(rng, tag).amplitudes();
    m += w * v * v.adjoint();
    total += w;
  }
  m /= total;
  m = 0.5 * (m + m.adjoint()).eval();
  return qsim::fock::DensityMatrix(tag, m);
}

inline DenseMatrix random_dense(std::mt19937& rng, int dim) {
  DenseMatrix m(dim, dim);
  std::normal_distribution<double> g;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

/// Brute-force Kronecker product by index arithmetic.
inline DenseMatrix kron_bruteforce(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      for (int k = 0; k < b.rows(); ++k)
        for (int l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

}  // namespace testing
