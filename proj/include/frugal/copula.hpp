#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "frugal/linalg.hpp"
#include "frugal/rng.hpp"

namespace frugal {

struct CorrelationValidation;

// Unit-diagonal symmetric PSD matrix parameterizing a Gaussian copula.
// Construction goes through validate_correlation(), which repairs indefinite
// inputs by alternating projections (eigenvalue clipping vs. unit-diagonal
// reset).
class CorrelationMatrix {
 public:
  CorrelationMatrix() = default;

  static CorrelationMatrix identity(std::size_t dim);

  std::size_t dim() const { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }

 private:
  friend CorrelationValidation validate_correlation(const Matrix& m);
  explicit CorrelationMatrix(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

struct CorrelationValidation {
  CorrelationMatrix corr;
  bool repaired = false;
};

CorrelationValidation validate_correlation(const Matrix& m);

// Spearman rank correlation -> Pearson correlation of the latent Gaussian:
// rho = 2 sin(pi rho_s / 6).
double spearman_to_pearson(double rho_s);

// n x dim matrix of copula ranks: w ~ MVN(0, R) componentwise through Phi.
// Cholesky factorization with an eigenvalue fallback for semidefinite R.
Matrix gauss_copula_sample(const CorrelationMatrix& r, std::size_t n, CounterRng& rng);

// Sampling factor F with F F^T = R (Cholesky, or eigen square root if R is
// only semidefinite).
Matrix copula_sampling_factor(const CorrelationMatrix& r);

struct ConditionalCopulaParams {
  std::vector<double> coefficients;  // beta, in the original covariate order
  double residual_var = 1.0;         // 1 - beta' R_zz beta, clamped to [0,1]
};

// Gaussian conditioning of the target coordinate on the rest.
ConditionalCopulaParams conditional_copula_params(const CorrelationMatrix& r,
                                                  std::size_t target_index);

// One conditional rank draw: eta ~ N(beta' PhiInv(u_z), residual_var), u = Phi(eta).
// Ranks at exactly 0 or 1 are rejected (infinite normal scores).
double conditional_copula_sample(const ConditionalCopulaParams& p,
                                 std::span<const double> u_z, CounterRng& rng);

// Pairwise Spearman correlations of pseudo-observations mapped through
// spearman_to_pearson, then repaired to PSD if needed.
CorrelationMatrix fit_gauss_copula(const Matrix& pseudo_obs);

struct MvnParams {
  std::vector<double> mean;
  Matrix cov;  // Sigma R Sigma
};

// Exact joint law of Gaussian-copula samples pushed through normal margins.
MvnParams mvn_oracle_params(std::span<const double> means, std::span<const double> sds,
                            const CorrelationMatrix& r);

struct RankUniformityCheck {
  bool mean_ok = false;
  bool var_ok = false;
};

// Conditions under which alternative covariate laws preserve the marginal:
// sum beta_d mu_d = 0 and sum (alpha_d beta_d)^2 = sum beta_d^2.
RankUniformityCheck rank_uniformity_condition_check(std::span<const double> beta,
                                                    std::span<const double> alphas,
                                                    std::span<const double> mus);

// Midrank pseudo-observations rank/(n+1) of one data column.
std::vector<double> pseudo_observations(std::span<const double> xs);

// Spearman rank correlation of two columns (midranks, Pearson on ranks).
double spearman_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace frugal
