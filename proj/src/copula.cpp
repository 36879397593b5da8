#include "frugal/copula.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "frugal/error.hpp"
#include "frugal/kernels.hpp"

namespace frugal {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kPsdSlack = -1e-10;

bool is_psd(const Matrix& m) {
  const auto es = linalg::eigen_sym(m);
  return es.values.front() >= kPsdSlack;
}

}  // namespace

CorrelationMatrix CorrelationMatrix::identity(std::size_t dim) {
  return CorrelationMatrix(Matrix::identity(dim));
}

CorrelationValidation validate_correlation(const Matrix& m) {
  const std::size_t n = m.rows();
  if (m.cols() != n || n == 0) throw ShapeError("correlation matrix must be square and nonempty");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::fabs(m(i, j) - m(j, i)) > 1e-12) {
        throw ShapeError("correlation matrix must be symmetric (entry " + std::to_string(i) +
                         "," + std::to_string(j) + ")");
      }
    }
  }

  bool clean = true;
  for (std::size_t i = 0; i < n && clean; ++i) {
    if (std::fabs(m(i, i) - 1.0) > 1e-12) clean = false;
    for (std::size_t j = i + 1; j < n && clean; ++j) {
      if (std::fabs(m(i, j)) > 1.0) clean = false;
    }
  }
  if (clean && is_psd(m)) {
    Matrix sym = m;
    for (std::size_t i = 0; i < n; ++i) {
      sym(i, i) = 1.0;
      for (std::size_t j = i + 1; j < n; ++j) sym(j, i) = sym(i, j);
    }
    return {CorrelationMatrix(std::move(sym)), false};
  }

  // Alternating projections: PSD cone vs. unit-diagonal box.
  Matrix cur = m;
  for (int it = 0; it < 200; ++it) {
    auto es = linalg::eigen_sym(cur);
    Matrix next(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      const double lam = std::max(es.values[j], 0.0);
      if (lam == 0.0) continue;
      for (std::size_t r = 0; r < n; ++r) {
        const double vr = es.vectors(r, j) * lam;
        for (std::size_t c = 0; c < n; ++c) next(r, c) += vr * es.vectors(c, j);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      next(i, i) = 1.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        double v = 0.5 * (next(i, j) + next(j, i));
        v = std::clamp(v, -1.0, 1.0);
        next(i, j) = v;
        next(j, i) = v;
      }
    }
    const double delta = linalg::max_abs_diff(next, cur);
    cur = std::move(next);
    if (delta < 1e-10 && is_psd(cur)) break;
  }
  return {CorrelationMatrix(std::move(cur)), true};
}

double spearman_to_pearson(double rho_s) {
  if (!(rho_s >= -1.0 && rho_s <= 1.0)) {
    throw RangeError("spearman_to_pearson requires |rho_s| <= 1, got " + std::to_string(rho_s));
  }
  return 2.0 * std::sin(kPi * rho_s / 6.0);
}

Matrix copula_sampling_factor(const CorrelationMatrix& r) {
  Matrix l;
  if (linalg::cholesky(r.matrix(), l)) return l;
  return linalg::psd_sqrt_factor(r.matrix());
}

Matrix gauss_copula_sample(const CorrelationMatrix& r, std::size_t n, CounterRng& rng) {
  if (n == 0) throw ParamError("gauss_copula_sample requires n >= 1");
  const std::size_t d = r.dim();
  const Matrix f = copula_sampling_factor(r);

  Matrix out(n, d);
  auto& buf = out.data();
  for (double& v : buf) v = rng.uniform01();
  kernels::phi_inv_batch(buf, buf);

  std::vector<double> w(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < d; ++b) s += f(a, b) * row[b];
      w[a] = s;
    }
    std::copy(w.begin(), w.end(), row.begin());
  }
  kernels::phi_batch(buf, buf);
  return out;
}

ConditionalCopulaParams conditional_copula_params(const CorrelationMatrix& r,
                                                  std::size_t target_index) {
  const std::size_t d = r.dim();
  if (d < 2) throw ConditioningError("conditioning requires dimension >= 2");
  if (target_index >= d) throw ShapeError("target index out of range");

  const std::size_t k = d - 1;
  Matrix rzz(k, k);
  std::vector<double> rzy(k);
  std::size_t ii = 0;
  for (std::size_t i = 0; i < d; ++i) {
    if (i == target_index) continue;
    std::size_t jj = 0;
    for (std::size_t j = 0; j < d; ++j) {
      if (j == target_index) continue;
      rzz(ii, jj) = r(i, j);
      ++jj;
    }
    rzy[ii] = r(i, target_index);
    ++ii;
  }

  Matrix l;
  if (!linalg::cholesky(rzz, l)) {
    Matrix jittered = rzz;
    for (std::size_t i = 0; i < k; ++i) jittered(i, i) += 1e-10;
    if (!linalg::cholesky(jittered, l)) {
      throw ConditioningError("covariate block of the copula is singular");
    }
  }
  ConditionalCopulaParams p;
  p.coefficients = linalg::cholesky_solve(l, rzy);
  double rv = 1.0;
  for (std::size_t i = 0; i < k; ++i) rv -= rzy[i] * p.coefficients[i];
  p.residual_var = std::clamp(rv, 0.0, 1.0);
  return p;
}

double conditional_copula_sample(const ConditionalCopulaParams& p,
                                 std::span<const double> u_z, CounterRng& rng) {
  if (u_z.size() != p.coefficients.size()) {
    throw ShapeError("conditional_copula_sample: rank vector size mismatch");
  }
  double eta = 0.0;
  for (std::size_t i = 0; i < u_z.size(); ++i) {
    if (!(u_z[i] > 0.0 && u_z[i] < 1.0)) {
      throw RangeError("conditional_copula_sample: rank at or beyond {0,1}");
    }
    eta += p.coefficients[i] * kernels::phi_inv(u_z[i]);
  }
  const double g = rng.normal();
  eta += std::sqrt(p.residual_var) * g;
  return kernels::phi(eta);
}

std::vector<double> pseudo_observations(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  const double n1 = static_cast<double>(n) + 1.0;
  for (double& r : ranks) r /= n1;
  return ranks;
}

double spearman_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("spearman: size mismatch");
  const auto ra = pseudo_observations(a);
  const auto rb = pseudo_observations(b);
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = ra[i] - ma;
    const double db = rb[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw FitError("spearman: constant column");
  return sab / std::sqrt(saa * sbb);
}

CorrelationMatrix fit_gauss_copula(const Matrix& pseudo_obs) {
  const std::size_t n = pseudo_obs.rows();
  const std::size_t d = pseudo_obs.cols();
  if (n < 3) throw FitError("fit_gauss_copula requires at least 3 rows");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double u = pseudo_obs(i, j);
      if (!(u > 0.0 && u < 1.0)) {
        throw RangeError("fit_gauss_copula: pseudo-observations must lie in (0,1)");
      }
    }
  }
  std::vector<std::vector<double>> cols(d);
  for (std::size_t j = 0; j < d; ++j) {
    cols[j].resize(n);
    for (std::size_t i = 0; i < n; ++i) cols[j][i] = pseudo_obs(i, j);
    const auto [mn, mx] = std::minmax_element(cols[j].begin(), cols[j].end());
    if (*mn == *mx) throw FitError("fit_gauss_copula: constant column " + std::to_string(j));
  }
  Matrix r(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    r(i, i) = 1.0;
    for (std::size_t j = i + 1; j < d; ++j) {
      const double rho_s = spearman_correlation(cols[i], cols[j]);
      const double rho = std::clamp(spearman_to_pearson(std::clamp(rho_s, -1.0, 1.0)), -1.0, 1.0);
      r(i, j) = rho;
      r(j, i) = rho;
    }
  }
  return validate_correlation(r).corr;
}

MvnParams mvn_oracle_params(std::span<const double> means, std::span<const double> sds,
                            const CorrelationMatrix& r) {
  const std::size_t d = r.dim();
  if (means.size() != d || sds.size() != d) {
    throw ShapeError("mvn_oracle_params: dimension mismatch");
  }
  for (double s : sds) {
    if (!(s > 0.0)) throw ParamError("mvn_oracle_params: sds must be positive");
  }
  MvnParams out;
  out.mean.assign(means.begin(), means.end());
  out.cov = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) out.cov(i, j) = sds[i] * sds[j] * r(i, j);
  }
  return out;
}

RankUniformityCheck rank_uniformity_condition_check(std::span<const double> beta,
                                                    std::span<const double> alphas,
                                                    std::span<const double> mus) {
  if (beta.size() != alphas.size() || beta.size() != mus.size()) {
    throw ShapeError("rank_uniformity_condition_check: length mismatch");
  }
  double mean_sum = 0.0, var_ab = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    mean_sum += beta[i] * mus[i];
    var_ab += alphas[i] * beta[i] * alphas[i] * beta[i];
    var_b += beta[i] * beta[i];
  }
  return {std::fabs(mean_sum) <= 1e-12, std::fabs(var_ab - var_b) <= 1e-12};
}

}  // namespace frugal
