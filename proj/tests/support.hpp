#pragma once

#include "vectrisk/common.hpp"
#include "vectrisk/data_model.hpp"
#include "vectrisk/design.hpp"
#include "vectrisk/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace support {

using vectrisk::Index;
using vectrisk::Matrix;
using vectrisk::Rng;
using vectrisk::Vector;

inline Matrix gaussian_matrix(Rng& rng, Index n, Index p) {
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) x(i, j) = rng.normal();
  }
  return x;
}

inline Vector poisson_target(Rng& rng, const Matrix& x, double b0, const Vector& beta) {
  const Vector eta = (x * beta).array() + b0;
  Vector y(x.rows());
  for (Index i = 0; i < y.size(); ++i) y[i] = static_cast<double>(rng.poisson(std::exp(eta[i])));
  return y;
}

/// Plain Newton-Raphson Poisson MLE with an intercept column, full rank only.
/// Returns [b0, beta...].
inline Vector newton_mle(const Matrix& x, const Vector& y, int iters = 200) {
  const Index n = x.rows();
  Matrix a(n, x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = x;
  Vector b = Vector::Zero(a.cols());
  b[0] = std::log(y.mean());
  for (int it = 0; it < iters; ++it) {
    const Vector mu = (a * b).array().exp();
    const Vector grad = a.transpose() * (y - mu);
    const Matrix h = a.transpose() * mu.asDiagonal() * a;
    const Vector step = h.ldlt().solve(grad);
    b += step;
    if (step.norm() < 1e-14) break;
  }
  return b;
}

/// Standardization computed independently of the library: centred columns
/// scaled by the population standard deviation.
inline Matrix standardize(const Matrix& x) {
  Matrix z = x;
  for (Index j = 0; j < x.cols(); ++j) {
    const double m = x.col(j).mean();
    z.col(j).array() -= m;
    const double sd = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(x.rows()));
    z.col(j) /= sd;
  }
  return z;
}

struct ProxResult {
  double b0 = 0.0;
  Vector beta;
  double objective = 0.0;  // maximized: (1/n) loglik - lambda |beta|_1
};

/// Accelerated proximal gradient (FISTA with backtracking and restarts) on
///   (1/n) sum (mu_i - y_i eta_i) + lambda |beta|_1, intercept unpenalized.
inline ProxResult prox_gradient(const Matrix& z, const Vector& y, double lambda, int iters = 50000) {
  const Index n = z.rows();
  const Index p = z.cols();
  const double nn = static_cast<double>(n);
  auto smooth = [&](double b0, const Vector& b) {
    const Vector eta = (z * b).array() + b0;
    return (eta.array().exp() - y.array() * eta.array()).sum() / nn;
  };
  auto soft = [](double v, double g) { return v > g ? v - g : (v < -g ? v + g : 0.0); };

  double b0 = std::log(std::max(y.mean(), 1e-8));
  Vector b = Vector::Zero(p);
  double c0 = b0;
  Vector c = b;
  double t = 1.0;
  double step = 1.0;
  double prev = smooth(b0, b) + lambda * b.lpNorm<1>();
  for (int it = 0; it < iters; ++it) {
    const Vector eta = (z * c).array() + c0;
    const Vector r = eta.array().exp().matrix() - y;
    const double g0 = r.sum() / nn;
    const Vector g = z.transpose() * r / nn;
    const double fc = smooth(c0, c);
    double nb0 = 0.0;
    Vector nb(p);
    for (;;) {
      nb0 = c0 - step * g0;
      for (Index j = 0; j < p; ++j) nb[j] = soft(c[j] - step * g[j], step * lambda);
      const double d0 = nb0 - c0;
      const Vector d = nb - c;
      const double bound = fc + g0 * d0 + g.dot(d) + (d0 * d0 + d.squaredNorm()) / (2.0 * step);
      if (smooth(nb0, nb) <= bound + 1e-15) break;
      step *= 0.5;
    }
    const double value = smooth(nb0, nb) + lambda * nb.lpNorm<1>();
    if (value > prev) {  // restart momentum
      t = 1.0;
      c0 = b0;
      c = b;
      continue;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    c0 = nb0 + (t - 1.0) / tn * (nb0 - b0);
    c = nb + (t - 1.0) / tn * (nb - b);
    const double change = std::abs(nb0 - b0) + (nb - b).lpNorm<1>();
    b0 = nb0;
    b = nb;
    t = tn;
    prev = value;
    if (change < 1e-15) break;
  }
  ProxResult out;
  out.b0 = b0;
  out.beta = b;
  // loglik including the -log(y!) terms, to match the library's objective
  double lgam = 0.0;
  for (Index i = 0; i < n; ++i) lgam += std::lgamma(y[i] + 1.0);
  out.objective = -smooth(b0, b) - lgam / nn - lambda * b.lpNorm<1>();
  return out;
}

inline vectrisk::Variable categorical(const std::string& name, const std::vector<std::string>& labels) {
  return vectrisk::Variable::from_labels(name, labels);
}

inline vectrisk::Variable numeric(const std::string& name, std::vector<double> v) {
  return vectrisk::Variable::numeric(name, std::move(v));
}

}  // namespace support
