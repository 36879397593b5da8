#include "frugal/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "frugal/error.hpp"

namespace frugal {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

namespace linalg {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw ShapeError("matvec: dimension mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff: shapes differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

bool cholesky(const Matrix& a, Matrix& l) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ShapeError("cholesky: matrix must be square");
  l = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return false;
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return true;
}

std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw ShapeError("cholesky_solve: dimension mismatch");
  std::vector<double> y(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

EigenSym eigen_sym(const Matrix& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ShapeError("eigen_sym: matrix must be square");
  Matrix d = a;
  Matrix v = Matrix::identity(n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += d(p, q) * d(p, q);
    if (off < 1e-26) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = d(p, q);
        if (std::fabs(apq) < 1e-300) continue;
        const double theta = 0.5 * (d(q, q) - d(p, p)) / apq;
        double t = 1.0 / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double dkp = d(k, p), dkq = d(k, q);
          d(k, p) = c * dkp - s * dkq;
          d(k, q) = s * dkp + c * dkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double dpk = d(p, k), dqk = d(q, k);
          d(p, k) = c * dpk - s * dqk;
          d(q, k) = s * dpk + c * dqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigenSym out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = d(i, i);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return out.values[i] < out.values[j]; });
  std::vector<double> sorted(n);
  Matrix vs(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    sorted[j] = out.values[order[j]];
    for (std::size_t i = 0; i < n; ++i) vs(i, j) = v(i, order[j]);
  }
  out.values = std::move(sorted);
  out.vectors = std::move(vs);
  return out;
}

Matrix psd_sqrt_factor(const Matrix& a) {
  const EigenSym es = eigen_sym(a);
  const std::size_t n = a.rows();
  Matrix f(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double lam = std::max(es.values[j], 0.0);
    const double s = std::sqrt(lam);
    for (std::size_t i = 0; i < n; ++i) f(i, j) = es.vectors(i, j) * s;
  }
  return f;
}

std::vector<double> least_squares(const Matrix& x, std::span<const double> y, double ridge) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (y.size() != n) throw ShapeError("least_squares: row count mismatch");
  if (n < p) throw FitError("least_squares: fewer rows than columns");

  // Householder QR on a working copy, applying the reflections to y as we go.
  Matrix r = x;
  std::vector<double> qty(y.begin(), y.end());
  double max_diag = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < n; ++i) norm += r(i, j) * r(i, j);
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      max_diag = 0.0;
      break;
    }
    const double alpha = r(j, j) > 0.0 ? -norm : norm;
    std::vector<double> v(n - j, 0.0);
    v[0] = r(j, j) - alpha;
    for (std::size_t i = j + 1; i < n; ++i) v[i - j] = r(i, j);
    double vnorm2 = 0.0;
    for (double vi : v) vnorm2 += vi * vi;
    if (vnorm2 > 0.0) {
      for (std::size_t c = j; c < p; ++c) {
        double dot = 0.0;
        for (std::size_t i = j; i < n; ++i) dot += v[i - j] * r(i, c);
        const double f = 2.0 * dot / vnorm2;
        for (std::size_t i = j; i < n; ++i) r(i, c) -= f * v[i - j];
      }
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) dot += v[i - j] * qty[i];
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = j; i < n; ++i) qty[i] -= f * v[i - j];
    }
    max_diag = std::max(max_diag, std::fabs(r(j, j)));
  }

  bool deficient = max_diag == 0.0;
  if (!deficient) {
    for (std::size_t j = 0; j < p; ++j) {
      if (std::fabs(r(j, j)) < 1e-10 * max_diag) {
        deficient = true;
        break;
      }
    }
  }
  if (!deficient) {
    std::vector<double> beta(p);
    for (std::size_t jj = p; jj-- > 0;) {
      double s = qty[jj];
      for (std::size_t k = jj + 1; k < p; ++k) s -= r(jj, k) * beta[k];
      beta[jj] = s / r(jj, jj);
    }
    return beta;
  }

  // Ridge fallback: solve (X'X + ridge I) beta = X'y by Cholesky.
  Matrix xtx(p, p);
  std::vector<double> xty(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < p; ++a) {
      xty[a] += x(i, a) * y[i];
      for (std::size_t b = a; b < p; ++b) xtx(a, b) += x(i, a) * x(i, b);
    }
  }
  for (std::size_t a = 0; a < p; ++a) {
    xtx(a, a) += ridge;
    for (std::size_t b = 0; b < a; ++b) xtx(a, b) = xtx(b, a);
  }
  Matrix l;
  if (!cholesky(xtx, l)) throw FitError("least_squares: singular design matrix");
  return cholesky_solve(l, xty);
}

}  // namespace linalg

}  // namespace frugal
