#include "jil/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace jil::linalg {

Matrix Matrix::identity(std::size_t k) {
  Matrix out(k, k);
  for (std::size_t i = 0; i < k; ++i) out(i, i) = 1.0;
  return out;
}

SymmetricEigen jacobi_eigen(const Matrix& input, double tol, int max_sweeps) {
  const std::size_t k = input.rows();
  if (input.cols() != k) throw std::invalid_argument("jacobi_eigen: not square");
  Matrix a = input;
  Matrix v = Matrix::identity(k);

  double scale = 0.0;
  for (double x : a.data()) scale = std::max(scale, std::abs(x));
  if (scale == 0.0 || k < 2) {
    SymmetricEigen out{std::vector<double>(k), v};
    for (std::size_t i = 0; i < k; ++i) out.values[i] = a(i, i);
    return out;
  }

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) off += a(i, j) * a(i, j);
    }
    if (std::sqrt(off) <= tol * scale) break;

    for (std::size_t pi = 0; pi + 1 < k; ++pi) {
      for (std::size_t qi = pi + 1; qi < k; ++qi) {
        const double apq = a(pi, qi);
        if (std::abs(apq) <= 1e-300) continue;
        const double app = a(pi, pi);
        const double aqq = a(qi, qi);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t r = 0; r < k; ++r) {
          const double arp = a(r, pi);
          const double arq = a(r, qi);
          a(r, pi) = c * arp - s * arq;
          a(r, qi) = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < k; ++r) {
          const double apr = a(pi, r);
          const double aqr = a(qi, r);
          a(pi, r) = c * apr - s * aqr;
          a(qi, r) = s * apr + c * aqr;
        }
        a(pi, qi) = 0.0;
        a(qi, pi) = 0.0;
        for (std::size_t r = 0; r < k; ++r) {
          const double vrp = v(r, pi);
          const double vrq = v(r, qi);
          v(r, pi) = c * vrp - s * vrq;
          v(r, qi) = s * vrp + c * vrq;
        }
      }
    }
  }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymmetricEigen out{std::vector<double>(k), Matrix(k, k)};
  for (std::size_t c = 0; c < k; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < k; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

std::vector<double> solve(Matrix a, std::vector<double> b) {
  const std::size_t k = a.rows();
  if (a.cols() != k || b.size() != k) {
    throw std::invalid_argument("solve: dimension mismatch");
  }
  double scale = 0.0;
  for (double x : a.data()) scale = std::max(scale, std::abs(x));
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    }
    if (std::abs(a(piv, col)) <= 1e-13 * std::max(scale, 1e-300)) {
      throw std::domain_error("solve: singular matrix");
    }
    if (piv != col) {
      for (std::size_t c = 0; c < k; ++c) std::swap(a(col, c), a(piv, c));
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < k; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < k; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(k);
  for (std::size_t i = k; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < k; ++c) s -= a(i, c) * x[c];
    x[i] = s / a(i, i);
  }
  return x;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace jil::linalg
