#include "frugal/models.hpp"

#include <algorithm>
#include <cmath>

#include "frugal/error.hpp"
#include "frugal/kernels.hpp"
#include "frugal/linalg.hpp"
#include "frugal/plugin.hpp"

namespace frugal {

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "s_linear") return ModelKind::s_linear;
  if (name == "t_linear") return ModelKind::t_linear;
  if (name == "s_knn") return ModelKind::s_knn;
  if (name == "t_knn") return ModelKind::t_knn;
  if (name == "gaussian_linear_dist") return ModelKind::gaussian_linear_dist;
  if (name == "oracle") return ModelKind::oracle;
  if (name == "plugin") return ModelKind::plugin;
  throw ConfigError("unknown model kind \"" + name + "\"");
}

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::s_linear: return "s_linear";
    case ModelKind::t_linear: return "t_linear";
    case ModelKind::s_knn: return "s_knn";
    case ModelKind::t_knn: return "t_knn";
    case ModelKind::gaussian_linear_dist: return "gaussian_linear_dist";
    case ModelKind::oracle: return "oracle";
    case ModelKind::plugin: return "plugin";
  }
  return "?";
}

std::string ModelSpec::name() const {
  if (!label.empty()) return label;
  if (kind == ModelKind::plugin && !plugin_command.empty()) {
    std::string base = plugin_command.front();
    const auto slash = base.find_last_of('/');
    if (slash != std::string::npos) base = base.substr(slash + 1);
    return "plugin:" + base;
  }
  return model_kind_name(kind);
}

Capability ModelSpec::capability() const {
  switch (kind) {
    case ModelKind::s_linear:
    case ModelKind::t_linear:
    case ModelKind::s_knn:
    case ModelKind::t_knn:
      return Capability::mean;
    case ModelKind::gaussian_linear_dist:
    case ModelKind::oracle:
    case ModelKind::plugin:
      return Capability::both;
  }
  return Capability::mean;
}

void ModelSpec::validate() const {
  if (knn_k < 1) throw ParamError("knn k must be >= 1");
  if (kind == ModelKind::plugin && plugin_command.empty()) {
    throw ParamError("plugin model requires a nonempty command");
  }
  if (!(plugin_timeout_s > 0.0)) throw ParamError("plugin timeout must be positive");
}

bool Predictor::can_mean() const {
  if (!impl_) return false;
  const Capability c = impl_->capability();
  return c == Capability::mean || c == Capability::both;
}

bool Predictor::can_dist() const {
  if (!impl_) return false;
  const Capability c = impl_->capability();
  return c == Capability::distributional || c == Capability::both;
}

double Predictor::predict_mean(int x, std::span<const double> z) const {
  if (!can_mean()) throw CapabilityError("predictor does not support mean prediction");
  return impl_->predict_mean(x, z);
}

std::vector<double> Predictor::predict_dist(int x, std::span<const double> z, std::size_t n_y,
                                            CounterRng& rng) const {
  if (!can_dist()) throw CapabilityError("predictor does not support distributional prediction");
  if (n_y == 0) throw ParamError("predict_dist requires n_y >= 1");
  return impl_->predict_dist(x, z, n_y, rng);
}

namespace {

Matrix s_design(const Dataset& data) {
  const std::size_t n = data.n();
  const std::size_t d = data.dim();
  Matrix m(n, d + 2);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, 0) = 1.0;
    for (std::size_t j = 0; j < d; ++j) m(i, j + 1) = data.z(i, j);
    m(i, d + 1) = static_cast<double>(data.x[i]);
  }
  return m;
}

// Least squares of y on (1, z, x).
struct SLinearImpl : Predictor::Impl {
  std::vector<double> beta;  // intercept, z..., x

  double predict_mean(int x, std::span<const double> z) const override {
    if (z.size() + 2 != beta.size()) throw ShapeError("s_linear: covariate size mismatch");
    double v = beta[0];
    for (std::size_t j = 0; j < z.size(); ++j) v += beta[j + 1] * z[j];
    v += beta.back() * static_cast<double>(x);
    return v;
  }
  std::vector<double> predict_dist(int, std::span<const double>, std::size_t,
                                   CounterRng&) const override {
    throw CapabilityError("s_linear is mean-only");
  }
  Capability capability() const override { return Capability::mean; }
};

// Per-arm least squares of y on (1, z).
struct TLinearImpl : Predictor::Impl {
  std::vector<double> beta0, beta1;

  double predict_arm(const std::vector<double>& b, std::span<const double> z) const {
    if (z.size() + 1 != b.size()) throw ShapeError("t_linear: covariate size mismatch");
    double v = b[0];
    for (std::size_t j = 0; j < z.size(); ++j) v += b[j + 1] * z[j];
    return v;
  }
  double predict_mean(int x, std::span<const double> z) const override {
    return predict_arm(x == 0 ? beta0 : beta1, z);
  }
  std::vector<double> predict_dist(int, std::span<const double>, std::size_t,
                                   CounterRng&) const override {
    throw CapabilityError("t_linear is mean-only");
  }
  Capability capability() const override { return Capability::mean; }
};

// Nearest-neighbor regression on features standardized by training moments.
struct KnnImpl : Predictor::Impl {
  bool s_mode = true;  // include treatment as a feature
  int k = 5;
  std::vector<double> mean, sd;          // per feature
  Matrix feats0, feats1;                 // t-mode: per-arm; s-mode: feats1 only
  std::vector<double> y0, y1;

  static double dist2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      s += d * d;
    }
    return s;
  }

  double knn_mean(const Matrix& feats, const std::vector<double>& ys,
                  std::span<const double> q) const {
    const std::size_t n = feats.rows();
    std::vector<std::pair<double, std::size_t>> ds(n);
    for (std::size_t i = 0; i < n; ++i) ds[i] = {dist2(feats.row(i), q), i};
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n);
    std::partial_sort(ds.begin(), ds.begin() + kk, ds.end());
    double s = 0.0;
    for (std::size_t i = 0; i < kk; ++i) s += ys[ds[i].second];
    return s / static_cast<double>(kk);
  }

  double predict_mean(int x, std::span<const double> z) const override {
    std::vector<double> q;
    if (s_mode) {
      q.resize(z.size() + 1);
      for (std::size_t j = 0; j < z.size(); ++j) q[j] = (z[j] - mean[j]) / sd[j];
      q[z.size()] = (static_cast<double>(x) - mean[z.size()]) / sd[z.size()];
      return knn_mean(feats1, y1, q);
    }
    q.resize(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) q[j] = (z[j] - mean[j]) / sd[j];
    return x == 0 ? knn_mean(feats0, y0, q) : knn_mean(feats1, y1, q);
  }
  std::vector<double> predict_dist(int, std::span<const double>, std::size_t,
                                   CounterRng&) const override {
    throw CapabilityError("knn is mean-only");
  }
  Capability capability() const override { return Capability::mean; }
};

// s_linear with a Gaussian residual model.
struct GaussianLinearImpl : Predictor::Impl {
  SLinearImpl base;
  double sigma = 0.0;

  double predict_mean(int x, std::span<const double> z) const override {
    return base.predict_mean(x, z);
  }
  std::vector<double> predict_dist(int x, std::span<const double> z, std::size_t n_y,
                                   CounterRng& rng) const override {
    const double mu = base.predict_mean(x, z);
    std::vector<double> out(n_y);
    for (double& v : out) v = mu + sigma * rng.normal();
    return out;
  }
  Capability capability() const override { return Capability::both; }
};

// True conditional outcome distribution computed from the frugal spec; the
// reference model for calibration and power checks. A constant bias can be
// added to every prediction.
struct OracleImpl : Predictor::Impl {
  FrugalSpec spec;
  double bias = 0.0;
  std::map<int, ConditionalCopulaParams> cond;

  std::vector<double> scores_of(std::span<const double> z) const {
    const std::size_t d = spec.dim();
    if (z.size() != d) throw ShapeError("oracle: covariate size mismatch");
    std::vector<double> s(d);
    for (std::size_t j = 0; j < d; ++j) {
      const Margin& m = spec.test_domain.covariate_margins[j];
      const bool disc = !spec.discrete_covariates.empty() && spec.discrete_covariates[j];
      double u = disc ? m.distributional_transform(z[j], 0.5) : m.cdf(z[j]);
      u = std::clamp(u, 1e-12, 1.0 - 1e-12);
      s[j] = kernels::phi_inv(u);
    }
    return s;
  }

  double predict_mean(int x, std::span<const double> z) const override {
    const auto& cp = cond.at(x);
    const auto s = scores_of(z);
    double m = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) m += cp.coefficients[j] * s[j];
    const Margin& ym = spec.causal_margin(x);
    if (ym.family() == MarginFamily::normal) {
      return ym.normal_mean() + ym.normal_sd() * m + bias;
    }
    // E[Q(Phi(m + sqrt(rv) t))] under t ~ N(0,1), Simpson on [-8, 8].
    const double rv = std::sqrt(cp.residual_var);
    const int np = 201;
    const double a = -8.0, b = 8.0;
    const double h = (b - a) / (np - 1);
    double acc = 0.0;
    for (int i = 0; i < np; ++i) {
      const double t = a + h * i;
      const double u = std::clamp(kernels::phi(m + rv * t), 1e-12, 1.0 - 1e-12);
      const double f = ym.quantile(u) * 0.39894228040143267794 * std::exp(-0.5 * t * t);
      const double w = (i == 0 || i == np - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      acc += w * f;
    }
    return acc * h / 3.0 + bias;
  }

  std::vector<double> predict_dist(int x, std::span<const double> z, std::size_t n_y,
                                   CounterRng& rng) const override {
    const auto& cp = cond.at(x);
    const auto s = scores_of(z);
    double m = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) m += cp.coefficients[j] * s[j];
    const double rv = std::sqrt(cp.residual_var);
    const Margin& ym = spec.causal_margin(x);
    std::vector<double> out(n_y);
    for (double& v : out) {
      const double u = std::clamp(kernels::phi(m + rv * rng.normal()), 1e-12, 1.0 - 1e-12);
      v = ym.quantile(u) + bias;
    }
    return out;
  }
  Capability capability() const override { return Capability::both; }
};

std::vector<double> fit_linear(const Matrix& design, std::span<const double> y) {
  return linalg::least_squares(design, y);
}

std::shared_ptr<SLinearImpl> fit_s_linear(const Dataset& data) {
  if (data.n() == 0) throw FitError("fit: empty dataset");
  auto impl = std::make_shared<SLinearImpl>();
  impl->beta = fit_linear(s_design(data), data.y);
  return impl;
}

}  // namespace

Predictor fit(const ModelSpec& spec, const Dataset& data, const FitContext& ctx) {
  spec.validate();
  if (data.n() == 0) throw FitError("fit: empty dataset");
  const std::size_t d = data.dim();

  switch (spec.kind) {
    case ModelKind::s_linear:
      return Predictor(fit_s_linear(data));

    case ModelKind::t_linear: {
      auto impl = std::make_shared<TLinearImpl>();
      for (int arm = 0; arm <= 1; ++arm) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < data.n(); ++i) {
          if (data.x[i] == arm) rows.push_back(i);
        }
        if (rows.empty()) {
          throw FitError("t_linear requires both treatment arms, arm " + std::to_string(arm) +
                         " is empty");
        }
        Matrix design(rows.size(), d + 1);
        std::vector<double> ys(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
          design(i, 0) = 1.0;
          for (std::size_t j = 0; j < d; ++j) design(i, j + 1) = data.z(rows[i], j);
          ys[i] = data.y[rows[i]];
        }
        auto beta = fit_linear(design, ys);
        (arm == 0 ? impl->beta0 : impl->beta1) = std::move(beta);
      }
      return Predictor(std::move(impl));
    }

    case ModelKind::s_knn:
    case ModelKind::t_knn: {
      auto impl = std::make_shared<KnnImpl>();
      impl->s_mode = spec.kind == ModelKind::s_knn;
      impl->k = spec.knn_k;
      const std::size_t nf = impl->s_mode ? d + 1 : d;
      impl->mean.assign(nf, 0.0);
      impl->sd.assign(nf, 0.0);
      const std::size_t n = data.n();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) impl->mean[j] += data.z(i, j);
        if (impl->s_mode) impl->mean[d] += data.x[i];
      }
      for (double& v : impl->mean) v /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          const double dd = data.z(i, j) - impl->mean[j];
          impl->sd[j] += dd * dd;
        }
        if (impl->s_mode) {
          const double dd = data.x[i] - impl->mean[d];
          impl->sd[d] += dd * dd;
        }
      }
      for (double& v : impl->sd) {
        v = n > 1 ? std::sqrt(v / static_cast<double>(n - 1)) : 0.0;
        if (v < 1e-12) v = 1.0;
      }
      if (impl->s_mode) {
        impl->feats1 = Matrix(n, nf);
        impl->y1 = data.y;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < d; ++j) {
            impl->feats1(i, j) = (data.z(i, j) - impl->mean[j]) / impl->sd[j];
          }
          impl->feats1(i, d) = (data.x[i] - impl->mean[d]) / impl->sd[d];
        }
      } else {
        for (int arm = 0; arm <= 1; ++arm) {
          std::vector<std::size_t> rows;
          for (std::size_t i = 0; i < n; ++i) {
            if (data.x[i] == arm) rows.push_back(i);
          }
          if (rows.empty()) {
            throw FitError("t_knn requires both treatment arms, arm " + std::to_string(arm) +
                           " is empty");
          }
          Matrix feats(rows.size(), d);
          std::vector<double> ys(rows.size());
          for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < d; ++j) {
              feats(i, j) = (data.z(rows[i], j) - impl->mean[j]) / impl->sd[j];
            }
            ys[i] = data.y[rows[i]];
          }
          if (arm == 0) {
            impl->feats0 = std::move(feats);
            impl->y0 = std::move(ys);
          } else {
            impl->feats1 = std::move(feats);
            impl->y1 = std::move(ys);
          }
        }
      }
      return Predictor(std::move(impl));
    }

    case ModelKind::gaussian_linear_dist: {
      auto impl = std::make_shared<GaussianLinearImpl>();
      impl->base.beta = fit_linear(s_design(data), data.y);
      const std::size_t n = data.n();
      const std::size_t p = d + 2;
      double rss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = data.y[i] - impl->base.predict_mean(data.x[i], data.z.row(i));
        rss += r * r;
      }
      impl->sigma = n > p ? std::sqrt(rss / static_cast<double>(n - p)) : 0.0;
      return Predictor(std::move(impl));
    }

    case ModelKind::oracle: {
      if (ctx.truth == nullptr) {
        throw FitError("oracle model requires the generating spec in the fit context");
      }
      auto impl = std::make_shared<OracleImpl>();
      impl->spec = *ctx.truth;
      impl->bias = spec.oracle_bias;
      for (const auto& [x, jc] : impl->spec.joint_copulas) {
        impl->cond.emplace(x, conditional_copula_params(jc, impl->spec.dim()));
      }
      return Predictor(std::move(impl));
    }

    case ModelKind::plugin:
      return fit_plugin_model(spec, data, ctx.plugin_host);
  }
  throw ParamError("unknown model kind");
}

}  // namespace frugal
