#include "frugal/hyptest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "frugal/error.hpp"
#include "frugal/plugin.hpp"
#include "frugal/special.hpp"

namespace frugal {

TTestResult t_test_one_sample(std::span<const double> samples, double target) {
  const std::size_t n = samples.size();
  if (n < 2) throw TestError("t test requires at least 2 samples");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd < 1e-12) {
    TTestResult r;
    r.degenerate = true;
    r.t = 0.0;
    r.p = std::fabs(mean - target) < 1e-12 ? 1.0 : 0.0;
    return r;
  }
  TTestResult r;
  r.t = (mean - target) / (sd / std::sqrt(static_cast<double>(n)));
  r.p = 2.0 * (1.0 - special::student_t_cdf(std::fabs(r.t), static_cast<double>(n - 1)));
  r.p = std::clamp(r.p, 0.0, 1.0);
  return r;
}

namespace {

void check_finite(const std::vector<double>& samples) {
  for (double v : samples) {
    if (std::isnan(v)) throw ParamError("test sample contains NaN");
  }
}

}  // namespace

GofResult ks_test_one_sample(std::vector<double> samples, const CdfFn& cdf) {
  if (samples.empty()) throw TestError("KS test requires at least 1 sample");
  check_finite(samples);
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    const double hi = (static_cast<double>(i) + 1.0) / n - f;
    const double lo = f - static_cast<double>(i) / n;
    d = std::max(d, std::max(hi, lo));
  }
  GofResult r;
  r.statistic = d;
  r.p = special::kolmogorov_sf(std::sqrt(n) * d);
  return r;
}

GofResult ks_test_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw TestError("two-sample KS requires nonempty samples");
  check_finite(a);
  check_finite(b);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  GofResult r;
  r.statistic = d;
  r.p = special::kolmogorov_sf(std::sqrt(na * nb / (na + nb)) * d);
  return r;
}

GofResult cvm_test_one_sample(std::vector<double> samples, const CdfFn& cdf) {
  if (samples.size() < 2) throw TestError("CvM test requires at least 2 samples");
  check_finite(samples);
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double w2 = 1.0 / (12.0 * n);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    const double e = (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n);
    w2 += (f - e) * (f - e);
  }
  GofResult r;
  r.statistic = w2;
  r.p = std::clamp(1.0 - special::cvm_limit_cdf(w2), 0.0, 1.0);
  return r;
}

GofResult pvalue_uniformity_check(std::span<const double> ps) {
  for (double p : ps) {
    if (!(p >= 0.0 && p <= 1.0)) throw RangeError("p-values must lie in [0,1]");
  }
  return ks_test_one_sample(std::vector<double>(ps.begin(), ps.end()),
                            [](double x) { return std::clamp(x, 0.0, 1.0); });
}

void TestConfig::validate() const {
  if (n_bootstrap < 1 || n_train < 1 || n_test < 1 || n_y < 1) {
    throw ConfigError("test configuration counts must all be >= 1");
  }
  if (x0 != 0 && x0 != 1) {
    throw ConfigError("x0 must be a supported treatment level (0 or 1)");
  }
  if (pooled_cap < 1) throw ConfigError("pooled_cap must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

namespace {

constexpr int kMaxRedraws = 10;
constexpr std::uint64_t kReservoirStream = 0xFF00000000000000ULL;

std::uint64_t bootstrap_stream(std::size_t b, int attempt) {
  return (static_cast<std::uint64_t>(attempt) << 48) | static_cast<std::uint64_t>(b);
}

const char* kDistNotes =
    "pooled predictive draws share fitted models across rows and bootstraps; the "
    "one-sample test treats them as independent";

// Runs fn(b) for b in [0, n) over `workers` threads; exceptions are captured
// and the first one rethrown after all workers stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t b = 0; b < n; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n) return;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int nw = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
  pool.reserve(static_cast<std::size_t>(nw));
  for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct BootstrapDraw {
  Dataset train;
  Dataset test;
  Predictor predictor;
  std::uint64_t stream = 0;
  std::size_t out_of_support = 0;
  CounterRng rng;  // positioned after the test draw; predict_dist continues it
};

// One bootstrap: training draw, fit, test draw. Redraws with a fresh derived
// stream when the test draw has no rows at x0 (when required).
BootstrapDraw run_bootstrap(const FrugalSpec& spec, const DomainSpec& train_domain,
                            const ModelSpec& model, const TestConfig& cfg,
                            std::uint64_t master_seed, std::size_t b, bool need_x0,
                            PluginHost* host) {
  const FitContext ctx{&spec, host};
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    const std::uint64_t stream = bootstrap_stream(b, attempt);
    CounterRng rng(master_seed, stream);
    Dataset train = sample_training_domain(spec, train_domain, cfg.n_train, rng);
    train.seed = stream;
    Predictor pred = fit(model, train, ctx);
    Dataset test = sample_test_domain(spec, cfg.n_test, rng);
    test.seed = stream;
    if (need_x0) {
      bool any = false;
      for (int xi : test.x) {
        if (xi == cfg.x0) {
          any = true;
          break;
        }
      }
      if (!any) continue;
    }
    BootstrapDraw out;
    out.out_of_support = train.out_of_support + test.out_of_support;
    out.train = std::move(train);
    out.test = std::move(test);
    out.predictor = std::move(pred);
    out.stream = stream;
    out.rng = rng;
    return out;
  }
  throw TestError("bootstrap " + std::to_string(b) + ": no test rows at x0=" +
                  std::to_string(cfg.x0) + " after " + std::to_string(kMaxRedraws) +
                  " redraws");
}

}  // namespace

TestReport mean_regression_test(const FrugalSpec& spec, const DomainSpec& train_domain,
                                const ModelSpec& model, const TestConfig& cfg,
                                std::uint64_t master_seed) {
  cfg.validate();
  spec.validate();
  if (model.capability() == Capability::distributional) {
    throw CapabilityError("mean test requires a mean-capable model");
  }
  const bool need_x0 = cfg.target == TestTarget::mu_at_x0;
  const std::size_t nb = cfg.n_bootstrap;

  std::vector<double> estimates(nb, 0.0);
  std::vector<std::uint64_t> streams(nb, 0);
  std::vector<std::size_t> oos(nb, 0);

  parallel_for(nb, cfg.workers, [&](std::size_t b) {
    thread_local PluginHost host;
    BootstrapDraw draw = run_bootstrap(spec, train_domain, model, cfg, master_seed, b, need_x0,
                                       model.kind == ModelKind::plugin ? &host : nullptr);
    double est = 0.0;
    if (cfg.target == TestTarget::mu_at_x0) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < draw.test.n(); ++i) {
        if (draw.test.x[i] != cfg.x0) continue;
        sum += draw.predictor.predict_mean(draw.test.x[i], draw.test.z.row(i));
        ++count;
      }
      est = sum / static_cast<double>(count);
    } else {
      double sum = 0.0;
      for (std::size_t i = 0; i < draw.test.n(); ++i) {
        sum += draw.predictor.predict_mean(1, draw.test.z.row(i)) -
               draw.predictor.predict_mean(0, draw.test.z.row(i));
      }
      est = sum / static_cast<double>(draw.test.n());
    }
    estimates[b] = est;
    streams[b] = draw.stream;
    oos[b] = draw.out_of_support;
  });

  const double target = cfg.target == TestTarget::mu_at_x0 ? true_marginal_mean(spec, cfg.x0)
                                                           : true_ate(spec);
  const TTestResult t = t_test_one_sample(estimates, target);

  TestReport rep;
  rep.p_value = t.p;
  rep.statistic = t.t;
  rep.degenerate = t.degenerate;
  rep.bootstrap_estimates = std::move(estimates);
  rep.master_seed = master_seed;
  rep.bootstrap_streams = std::move(streams);
  for (std::size_t v : oos) rep.out_of_support += v;
  return rep;
}

TestReport dist_regression_test(const FrugalSpec& spec, const DomainSpec& train_domain,
                                const ModelSpec& model, const TestConfig& cfg,
                                std::uint64_t master_seed) {
  cfg.validate();
  spec.validate();
  if (model.capability() == Capability::mean) {
    throw CapabilityError("distributional test requires a distribution-capable model");
  }
  const std::size_t nb = cfg.n_bootstrap;

  std::vector<std::vector<double>> pools(nb);
  std::vector<std::uint64_t> streams(nb, 0);
  std::vector<std::size_t> oos(nb, 0);

  parallel_for(nb, cfg.workers, [&](std::size_t b) {
    thread_local PluginHost host;
    BootstrapDraw draw = run_bootstrap(spec, train_domain, model, cfg, master_seed, b,
                                       /*need_x0=*/true,
                                       model.kind == ModelKind::plugin ? &host : nullptr);
    auto& pool = pools[b];
    for (std::size_t i = 0; i < draw.test.n(); ++i) {
      if (draw.test.x[i] != cfg.x0) continue;
      const auto samples =
          draw.predictor.predict_dist(cfg.x0, draw.test.z.row(i), cfg.n_y, draw.rng);
      pool.insert(pool.end(), samples.begin(), samples.end());
    }
    streams[b] = draw.stream;
    oos[b] = draw.out_of_support;
  });

  // Deterministic merge in bootstrap order; reservoir-subsample past the cap.
  std::vector<double> pooled;
  bool subsampled = false;
  CounterRng res_rng(master_seed, kReservoirStream);
  std::size_t seen = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    for (double v : pools[b]) {
      ++seen;
      if (pooled.size() < cfg.pooled_cap) {
        pooled.push_back(v);
      } else {
        subsampled = true;
        const std::uint64_t j = res_rng.below(seen);
        if (j < cfg.pooled_cap) pooled[j] = v;
      }
    }
    pools[b].clear();
    pools[b].shrink_to_fit();
  }
  if (pooled.empty()) throw TestError("distributional test pooled no samples");

  const Margin& ref = spec.causal_margin(cfg.x0);
  const CdfFn cdf = [&ref](double v) { return ref.cdf(v); };
  const GofResult g = cfg.dist_test == DistTestKind::ks ? ks_test_one_sample(pooled, cdf)
                                                        : cvm_test_one_sample(pooled, cdf);

  TestReport rep;
  rep.p_value = g.p;
  rep.statistic = g.statistic;
  rep.master_seed = master_seed;
  rep.bootstrap_streams = std::move(streams);
  rep.pooled_count = pooled.size();
  double m = 0.0;
  for (double v : pooled) m += v;
  m /= static_cast<double>(pooled.size());
  double ss = 0.0;
  for (double v : pooled) ss += (v - m) * (v - m);
  rep.pooled_mean = m;
  rep.pooled_sd = pooled.size() > 1 ? std::sqrt(ss / static_cast<double>(pooled.size() - 1)) : 0.0;
  rep.subsampled = subsampled;
  rep.notes = kDistNotes;
  for (std::size_t v : oos) rep.out_of_support += v;
  return rep;
}

}  // namespace frugal
