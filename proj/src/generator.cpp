#include "frugal/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "frugal/error.hpp"
#include "frugal/kernels.hpp"

#include "kernels_core.hpp"

namespace frugal {

namespace {

constexpr double kRankClampLo = 1e-12;
constexpr double kPropClampLo = 0.01;
constexpr double kPropClampHi = 0.99;

}  // namespace

PropensityModel PropensityModel::constant(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ParamError("constant propensity requires p in (0,1)");
  PropensityModel m;
  m.kind = Kind::constant;
  m.p = p;
  return m;
}

PropensityModel PropensityModel::logistic(double intercept, std::vector<double> weights) {
  PropensityModel m;
  m.kind = Kind::logistic;
  m.intercept = intercept;
  m.weights = std::move(weights);
  return m;
}

double PropensityModel::prob(std::span<const double> z) const {
  double p_raw;
  if (kind == Kind::constant) {
    p_raw = p;
  } else {
    if (z.size() != weights.size()) throw ShapeError("propensity: covariate size mismatch");
    double eta = intercept;
    for (std::size_t i = 0; i < z.size(); ++i) eta += weights[i] * z[i];
    p_raw = 1.0 / (1.0 + kernels::core::exp_core(-eta));
  }
  return std::clamp(p_raw, kPropClampLo, kPropClampHi);
}

void DomainSpec::validate() const {
  if (covariate_margins.empty()) throw ParamError("domain requires at least one covariate");
  if (covariate_copula.dim() != dim()) {
    throw ShapeError("covariate copula dimension does not match margin count");
  }
  if (propensity.kind == PropensityModel::Kind::logistic &&
      propensity.weights.size() != dim()) {
    throw ShapeError("logistic propensity weight count does not match covariates");
  }
}

void FrugalSpec::validate() const {
  test_domain.validate();
  const std::size_t d = dim();
  if (causal_margins.count(0) == 0 || causal_margins.count(1) == 0) {
    throw ParamError("causal margins must be defined for treatment levels 0 and 1");
  }
  if (!discrete_covariates.empty() && discrete_covariates.size() != d) {
    throw ShapeError("discrete covariate flags size mismatch");
  }
  for (const auto& [x, jc] : joint_copulas) {
    (void)x;
    if (jc.dim() != d + 1) throw ShapeError("joint copula must have dimension D+1");
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        if (std::fabs(jc(i, j) - test_domain.covariate_copula(i, j)) > 1e-9) {
          throw ParamError(
              "joint copula covariate block must match the test covariate copula");
        }
      }
    }
  }
  for (int x : {0, 1}) {
    if (joint_copulas.count(x) == 0) {
      throw ParamError("joint copula missing for treatment level " + std::to_string(x));
    }
  }
}

const CorrelationMatrix& FrugalSpec::arm_copula(int x) const {
  const auto it = joint_copulas.find(x);
  if (it == joint_copulas.end()) {
    throw ParamError("no joint copula for treatment level " + std::to_string(x));
  }
  return it->second;
}

const Margin& FrugalSpec::causal_margin(int x) const {
  const auto it = causal_margins.find(x);
  if (it == causal_margins.end()) {
    throw ParamError("no causal margin for treatment level " + std::to_string(x));
  }
  return it->second;
}

FrugalSpec FrugalSpec::build(DomainSpec test_domain, std::map<int, Margin> causal_margins,
                             std::map<int, std::vector<double>> outcome_pearson,
                             std::vector<bool> discrete_covariates) {
  test_domain.validate();
  const std::size_t d = test_domain.dim();
  FrugalSpec spec;
  spec.test_domain = std::move(test_domain);
  spec.causal_margins = std::move(causal_margins);
  spec.discrete_covariates = std::move(discrete_covariates);
  if (spec.discrete_covariates.empty()) spec.discrete_covariates.assign(d, false);

  for (const auto& [x, rho] : outcome_pearson) {
    if (rho.size() != d) throw ShapeError("outcome correlation vector size mismatch");
    Matrix jm(d + 1, d + 1);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) jm(i, j) = spec.test_domain.covariate_copula(i, j);
      jm(i, d) = rho[i];
      jm(d, i) = rho[i];
    }
    jm(d, d) = 1.0;
    // PSD via the Schur complement: rho' R_zz^{-1} rho <= 1.
    Matrix l;
    if (!linalg::cholesky(spec.test_domain.covariate_copula.matrix(), l)) {
      Matrix jit = spec.test_domain.covariate_copula.matrix();
      for (std::size_t i = 0; i < d; ++i) jit(i, i) += 1e-10;
      if (!linalg::cholesky(jit, l)) throw ParamError("covariate copula is singular");
    }
    const auto beta = linalg::cholesky_solve(l, rho);
    double q = 0.0;
    for (std::size_t i = 0; i < d; ++i) q += rho[i] * beta[i];
    if (q > 1.0 + 1e-12) {
      throw ParamError("outcome correlations are incompatible with the covariate copula (q=" +
                       std::to_string(q) + " > 1)");
    }
    auto v = validate_correlation(jm);
    spec.joint_copulas.emplace(x, v.corr);
  }
  spec.validate();
  return spec;
}

namespace {

struct ArmConditional {
  ConditionalCopulaParams params;
};

std::map<int, ArmConditional> arm_conditionals(const FrugalSpec& spec) {
  std::map<int, ArmConditional> out;
  for (const auto& [x, jc] : spec.joint_copulas) {
    out.emplace(x, ArmConditional{conditional_copula_params(jc, spec.dim())});
  }
  return out;
}

// Outcome rank -> outcome value through the arm margin.
double outcome_from_rank(const FrugalSpec& spec, int x, double u_y) {
  const double u = std::clamp(u_y, kRankClampLo, 1.0 - kRankClampLo);
  return spec.causal_margin(x).quantile(u);
}

// Test-margin rank of one covariate value, with the generation-path clamp.
// Returns the clamped rank; `clamped` reports whether clamping moved it.
double test_rank_of(const Margin& m, double z, bool discrete, double v, bool* clamped) {
  double u = discrete ? m.distributional_transform(z, v) : m.cdf(z);
  double lo = kRankClampLo;
  double hi = 1.0 - kRankClampLo;
  if (m.family() == MarginFamily::empirical) {
    const double n1 = static_cast<double>(m.sample_size()) + 1.0;
    lo = 1.0 / n1;
    hi = static_cast<double>(m.sample_size()) / n1;
  }
  const double uc = std::clamp(u, lo, hi);
  if (clamped != nullptr && uc != u) *clamped = true;
  // Out-of-support detection for empirical margins: beyond the stored range
  // the CDF saturates at hi without numerically clamping.
  if (clamped != nullptr && m.family() == MarginFamily::empirical &&
      (z < m.values().front() || z > m.values().back())) {
    *clamped = true;
  }
  return uc;
}

}  // namespace

Dataset sample_test_domain(const FrugalSpec& spec, std::size_t n, CounterRng& rng) {
  if (n == 0) throw ParamError("sample_test_domain requires n >= 1");
  spec.validate();
  const std::size_t d = spec.dim();
  const Matrix f = copula_sampling_factor(spec.test_domain.covariate_copula);
  const auto conds = arm_conditionals(spec);

  Dataset ds;
  ds.tag = Dataset::Tag::test;
  ds.z = Matrix(n, d);
  ds.x.resize(n);
  ds.y.resize(n);

  // Stage 1: covariate normal scores w = F g, ranks u = Phi(w).
  Matrix scores(n, d);
  for (double& v : scores.data()) v = rng.uniform01();
  kernels::phi_inv_batch(scores.data(), scores.data());
  std::vector<double> tmp(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = scores.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < d; ++b) s += f(a, b) * row[b];
      tmp[a] = s;
    }
    std::copy(tmp.begin(), tmp.end(), row.begin());
  }
  Matrix ranks = scores;
  kernels::phi_batch(ranks.data(), ranks.data());

  // Stage 2: covariates via test-margin quantiles.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t dcol = 0; dcol < d; ++dcol) {
      ds.z(i, dcol) = spec.test_domain.covariate_margins[dcol].quantile(ranks(i, dcol));
    }
  }

  // Stage 3: treatment.
  for (std::size_t i = 0; i < n; ++i) {
    ds.x[i] = rng.bernoulli(spec.test_domain.propensity.prob(ds.z.row(i))) ? 1 : 0;
  }

  // Stage 4: outcome rank conditional on the drawn covariate scores.
  std::vector<double> g(n);
  for (double& v : g) v = rng.uniform01();
  kernels::phi_inv_batch(g, g);
  std::vector<double> eta(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& cp = conds.at(ds.x[i]).params;
    double e = 0.0;
    const auto row = scores.row(i);
    for (std::size_t a = 0; a < d; ++a) e += cp.coefficients[a] * row[a];
    eta[i] = e + std::sqrt(cp.residual_var) * g[i];
  }
  kernels::phi_batch(eta, eta);
  for (std::size_t i = 0; i < n; ++i) ds.y[i] = outcome_from_rank(spec, ds.x[i], eta[i]);
  return ds;
}

Dataset sample_training_domain(const FrugalSpec& spec, const DomainSpec& train_domain,
                               std::size_t n, CounterRng& rng) {
  if (n == 0) throw ParamError("sample_training_domain requires n >= 1");
  spec.validate();
  train_domain.validate();
  const std::size_t d = spec.dim();
  if (train_domain.dim() != d) {
    throw ShapeError("training domain dimension does not match the frugal spec");
  }
  const Matrix f = copula_sampling_factor(train_domain.covariate_copula);
  const auto conds = arm_conditionals(spec);

  Dataset ds;
  ds.tag = Dataset::Tag::train;
  ds.z = Matrix(n, d);
  ds.x.resize(n);
  ds.y.resize(n);

  // Stage 1: training covariate ranks.
  Matrix scores(n, d);
  for (double& v : scores.data()) v = rng.uniform01();
  kernels::phi_inv_batch(scores.data(), scores.data());
  std::vector<double> tmp(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = scores.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < d; ++b) s += f(a, b) * row[b];
      tmp[a] = s;
    }
    std::copy(tmp.begin(), tmp.end(), row.begin());
  }
  Matrix ranks = scores;
  kernels::phi_batch(ranks.data(), ranks.data());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t dcol = 0; dcol < d; ++dcol) {
      ds.z(i, dcol) = train_domain.covariate_margins[dcol].quantile(ranks(i, dcol));
    }
  }

  // Stage 2: treatment from the training propensity.
  for (std::size_t i = 0; i < n; ++i) {
    ds.x[i] = rng.bernoulli(train_domain.propensity.prob(ds.z.row(i))) ? 1 : 0;
  }

  // Stage 3: test-margin ranks of the training covariates. Fresh uniforms for
  // the distributional transform of discrete covariates, consumed column by
  // column so the stream layout is stable.
  Matrix tranks(n, d);
  for (std::size_t dcol = 0; dcol < d; ++dcol) {
    const bool disc =
        !spec.discrete_covariates.empty() && spec.discrete_covariates[dcol];
    const Margin& m = spec.test_domain.covariate_margins[dcol];
    for (std::size_t i = 0; i < n; ++i) {
      const double v = disc ? rng.uniform01() : 0.0;
      bool clamped = false;
      tranks(i, dcol) = test_rank_of(m, ds.z(i, dcol), disc, v, &clamped);
      if (clamped) ++ds.out_of_support;
    }
  }
  kernels::phi_inv_batch(tranks.data(), tranks.data());  // in place: ranks -> scores

  // Stage 4: conditional outcome rank from the arm copula.
  std::vector<double> g(n);
  for (double& v : g) v = rng.uniform01();
  kernels::phi_inv_batch(g, g);
  std::vector<double> eta(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& cp = conds.at(ds.x[i]).params;
    double e = 0.0;
    const auto row = tranks.row(i);
    for (std::size_t a = 0; a < d; ++a) e += cp.coefficients[a] * row[a];
    eta[i] = e + std::sqrt(cp.residual_var) * g[i];
  }
  kernels::phi_batch(eta, eta);
  for (std::size_t i = 0; i < n; ++i) ds.y[i] = outcome_from_rank(spec, ds.x[i], eta[i]);
  return ds;
}

namespace {

std::vector<double> conditional_draws_impl(const FrugalSpec& spec, std::span<const double> z,
                                           int x, std::size_t n, CounterRng& rng,
                                           bool transform_discrete) {
  spec.validate();
  const std::size_t d = spec.dim();
  if (z.size() != d) throw ShapeError("conditional draws: covariate size mismatch");
  const auto cp = conditional_copula_params(spec.arm_copula(x), d);

  std::vector<double> out(n);
  std::vector<double> scores(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t dcol = 0; dcol < d; ++dcol) {
      const bool disc = transform_discrete && !spec.discrete_covariates.empty() &&
                        spec.discrete_covariates[dcol];
      const double v = disc ? rng.uniform01() : 0.0;
      const double u =
          test_rank_of(spec.test_domain.covariate_margins[dcol], z[dcol], disc, v, nullptr);
      scores[dcol] = kernels::phi_inv(u);
    }
    double eta = 0.0;
    for (std::size_t a = 0; a < d; ++a) eta += cp.coefficients[a] * scores[a];
    eta += std::sqrt(cp.residual_var) * rng.normal();
    out[i] = outcome_from_rank(spec, x, kernels::phi(eta));
  }
  return out;
}

}  // namespace

std::vector<double> conditional_outcome_draws_test(const FrugalSpec& spec,
                                                   std::span<const double> z, int x,
                                                   std::size_t n, CounterRng& rng) {
  return conditional_draws_impl(spec, z, x, n, rng, /*transform_discrete=*/false);
}

std::vector<double> conditional_outcome_draws_train(const FrugalSpec& spec,
                                                    std::span<const double> z, int x,
                                                    std::size_t n, CounterRng& rng) {
  return conditional_draws_impl(spec, z, x, n, rng, /*transform_discrete=*/true);
}

double true_marginal_mean(const FrugalSpec& spec, int x) {
  return spec.causal_margin(x).mean();
}

double true_ate(const FrugalSpec& spec) {
  return true_marginal_mean(spec, 1) - true_marginal_mean(spec, 0);
}

namespace {

// Logistic regression by Newton-Raphson IRLS.
PropensityModel fit_logistic(const Matrix& z, const std::vector<int>& x) {
  const std::size_t n = z.rows();
  const std::size_t d = z.cols();
  std::vector<double> beta(d + 1, 0.0);  // intercept first
  for (int it = 0; it < 50; ++it) {
    Matrix h(d + 1, d + 1);
    std::vector<double> grad(d + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double eta = beta[0];
      for (std::size_t j = 0; j < d; ++j) eta += beta[j + 1] * z(i, j);
      const double mu = 1.0 / (1.0 + kernels::core::exp_core(-eta));
      const double w = std::max(mu * (1.0 - mu), 1e-6);
      const double r = static_cast<double>(x[i]) - mu;
      grad[0] += r;
      for (std::size_t j = 0; j < d; ++j) grad[j + 1] += r * z(i, j);
      h(0, 0) += w;
      for (std::size_t j = 0; j < d; ++j) {
        h(0, j + 1) += w * z(i, j);
        for (std::size_t k = j; k < d; ++k) h(j + 1, k + 1) += w * z(i, j) * z(i, k);
      }
    }
    for (std::size_t a = 0; a < d + 1; ++a) {
      h(a, a) += 1e-8;  // keeps separation from blowing up the solve
      for (std::size_t b = 0; b < a; ++b) h(a, b) = h(b, a);
    }
    Matrix l;
    if (!linalg::cholesky(h, l)) throw FitError("logistic fit: singular information matrix");
    const auto step = linalg::cholesky_solve(l, grad);
    double max_step = 0.0;
    for (std::size_t a = 0; a < d + 1; ++a) {
      beta[a] += step[a];
      max_step = std::max(max_step, std::fabs(step[a]));
    }
    if (max_step < 1e-10) break;
  }
  return PropensityModel::logistic(beta[0],
                                   std::vector<double>(beta.begin() + 1, beta.end()));
}

std::vector<double> column(const Matrix& m, std::size_t j, const std::vector<std::size_t>& rows) {
  std::vector<double> v(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) v[i] = m(rows[i], j);
  return v;
}

// Pseudo-observations of one covariate column over a row subset: midranks for
// continuous columns, the generalized distributional transform for discrete
// ones (fresh uniforms from `rng`).
std::vector<double> column_pseudo_obs(const std::vector<double>& vals, bool discrete,
                                      CounterRng& rng) {
  if (!discrete) return pseudo_observations(vals);
  const Margin m = fit_margin(MarginFamily::empirical, vals);
  std::vector<double> out(vals.size());
  const double n1 = static_cast<double>(vals.size()) + 1.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double u = m.distributional_transform(vals[i], rng.uniform01());
    out[i] = std::clamp(u, 1.0 / n1, static_cast<double>(vals.size()) / n1);
  }
  return out;
}

}  // namespace

FrugalSpec fit_frugal_from_data(const DataTable& table, const FrugalFitOptions& opts) {
  const std::size_t n = table.n();
  const std::size_t d = table.dim();
  if (n == 0 || d == 0) throw FitError("fit_frugal_from_data: empty table");
  if (table.y.size() != n || table.z.rows() != n) throw ShapeError("table shape mismatch");

  std::vector<std::size_t> arm0, arm1;
  for (std::size_t i = 0; i < n; ++i) {
    if (table.x[i] == 0) {
      arm0.push_back(i);
    } else if (table.x[i] == 1) {
      arm1.push_back(i);
    } else {
      throw FitError("treatment column must be binary 0/1");
    }
  }
  for (const auto* arm : {&arm0, &arm1}) {
    if (arm->size() < 10) {
      throw FitError("each treatment arm needs at least 10 rows, got " +
                     std::to_string(arm->size()));
    }
  }

  // Covariate margins on the pooled sample.
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<Margin> cov_margins;
  for (std::size_t j = 0; j < d; ++j) {
    const auto vals = column(table.z, j, all);
    const bool disc = j < table.discrete.size() && table.discrete[j];
    bool binary = disc;
    if (disc) {
      for (double v : vals) binary = binary && (v == 0.0 || v == 1.0);
    }
    cov_margins.push_back(binary ? fit_margin(MarginFamily::bernoulli, vals)
                                 : fit_margin(MarginFamily::empirical, vals));
  }

  // Propensity.
  PropensityModel prop;
  if (opts.constant_propensity) {
    double mean_x = 0.0;
    for (int xi : table.x) mean_x += xi;
    mean_x /= static_cast<double>(n);
    prop = PropensityModel::constant(std::clamp(mean_x, kPropClampLo, kPropClampHi));
  } else {
    prop = fit_logistic(table.z, table.x);
  }

  // Causal margins per arm (optionally inverse-propensity weighted).
  std::map<int, Margin> causal;
  for (int arm = 0; arm <= 1; ++arm) {
    const auto& rows = arm == 0 ? arm0 : arm1;
    std::vector<double> ys(rows.size());
    std::vector<double> ws(rows.size(), 1.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      ys[i] = table.y[rows[i]];
      if (opts.propensity_weighted_margins) {
        const double px = prop.prob(table.z.row(rows[i]));
        ws[i] = arm == 1 ? 1.0 / px : 1.0 / (1.0 - px);
      }
    }
    try {
      causal.emplace(arm, fit_margin_weighted(opts.causal_family, ys, ws));
    } catch (const FitError& e) {
      throw FitError("causal margin fit failed on arm " + std::to_string(arm) + ": " + e.what());
    }
  }

  // Pooled covariate copula.
  CounterRng fit_rng(opts.seed, 0x706f6f6c);  // transform randomization stream
  Matrix pooled_pseudo(n, d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto vals = column(table.z, j, all);
    const bool disc = j < table.discrete.size() && table.discrete[j];
    const auto po = column_pseudo_obs(vals, disc, fit_rng);
    for (std::size_t i = 0; i < n; ++i) pooled_pseudo(i, j) = po[i];
  }
  CorrelationMatrix cov_copula = fit_gauss_copula(pooled_pseudo);

  DomainSpec test_domain;
  test_domain.covariate_margins = std::move(cov_margins);
  test_domain.covariate_copula = cov_copula;
  test_domain.propensity = prop;

  // Per-arm joint copulas; the covariate block is the pooled copula, the
  // outcome column comes from the within-arm fit, shrunk if the Schur
  // complement would leave the PSD cone.
  std::map<int, std::vector<double>> outcome_cols;
  for (int arm = 0; arm <= 1; ++arm) {
    const auto& rows = arm == 0 ? arm0 : arm1;
    const std::size_t na = rows.size();
    Matrix arm_pseudo(na, d + 1);
    for (std::size_t j = 0; j < d; ++j) {
      const auto vals = column(table.z, j, rows);
      const bool disc = j < table.discrete.size() && table.discrete[j];
      const auto po = column_pseudo_obs(vals, disc, fit_rng);
      for (std::size_t i = 0; i < na; ++i) arm_pseudo(i, j) = po[i];
    }
    std::vector<double> ys(na);
    for (std::size_t i = 0; i < na; ++i) ys[i] = table.y[rows[i]];
    const auto ypo = pseudo_observations(ys);
    for (std::size_t i = 0; i < na; ++i) arm_pseudo(i, d) = ypo[i];

    const CorrelationMatrix arm_fit = fit_gauss_copula(arm_pseudo);
    std::vector<double> rho(d);
    for (std::size_t j = 0; j < d; ++j) rho[j] = arm_fit(j, d);

    Matrix l;
    Matrix base = cov_copula.matrix();
    if (!linalg::cholesky(base, l)) {
      for (std::size_t i = 0; i < d; ++i) base(i, i) += 1e-10;
      if (!linalg::cholesky(base, l)) throw FitError("pooled covariate copula is singular");
    }
    const auto beta = linalg::cholesky_solve(l, rho);
    double q = 0.0;
    for (std::size_t j = 0; j < d; ++j) q += rho[j] * beta[j];
    if (q > 1.0 - 1e-9) {
      const double shrink = std::sqrt((1.0 - 1e-9) / q);
      for (double& v : rho) v *= shrink;
    }
    outcome_cols.emplace(arm, std::move(rho));
  }

  std::vector<bool> flags(table.discrete.begin(), table.discrete.end());
  flags.resize(d, false);
  return FrugalSpec::build(std::move(test_domain), std::move(causal), std::move(outcome_cols),
                           std::move(flags));
}

DomainSpec apply_shift(const DomainSpec& domain, const ShiftConfig& shift) {
  DomainSpec out = domain;
  for (const auto& act : shift.actions) {
    switch (act.kind) {
      case ShiftAction::Kind::scale_covariate: {
        if (act.covariate >= out.dim()) throw ParamError("shift targets a missing covariate");
        if (!(act.factor > 0.0)) throw ParamError("scale factor must be positive");
        Margin& m = out.covariate_margins[act.covariate];
        switch (m.family()) {
          case MarginFamily::normal:
            m = Margin::normal(act.factor * m.normal_mean(), act.factor * m.normal_sd());
            break;
          case MarginFamily::gamma:
            m = Margin::gamma(m.gamma_shape(), m.gamma_rate() / act.factor);
            break;
          case MarginFamily::empirical: {
            std::vector<double> vals = m.values();
            for (double& v : vals) v *= act.factor;
            m = Margin::empirical(std::move(vals));
            break;
          }
          case MarginFamily::bernoulli:
            throw ParamError("unsupported shift: cannot scale a bernoulli margin");
        }
        break;
      }
      case ShiftAction::Kind::replace_margin:
        if (act.covariate >= out.dim()) throw ParamError("shift targets a missing covariate");
        out.covariate_margins[act.covariate] = act.margin;
        break;
      case ShiftAction::Kind::replace_propensity:
        out.propensity = act.propensity;
        break;
    }
  }
  return out;
}

}  // namespace frugal
