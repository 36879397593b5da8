#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "frugal/generator.hpp"
#include "frugal/rng.hpp"

namespace frugal {

enum class ModelKind { s_linear, t_linear, s_knn, t_knn, gaussian_linear_dist, oracle, plugin };
enum class Capability { mean, distributional, both };

ModelKind model_kind_from_name(const std::string& name);
const char* model_kind_name(ModelKind k);

struct ModelSpec {
  ModelKind kind = ModelKind::s_linear;
  int knn_k = 5;
  double oracle_bias = 0.0;  // constant added to oracle predictions
  std::vector<std::string> plugin_command;
  std::map<std::string, std::string> plugin_env;
  double plugin_timeout_s = 300.0;
  std::string label;  // optional display name

  std::string name() const;
  // Static capability; a plugin's actual capability is resolved at handshake.
  Capability capability() const;
  void validate() const;
};

class Predictor {
 public:
  struct Impl {
    virtual ~Impl() = default;
    virtual double predict_mean(int x, std::span<const double> z) const = 0;
    virtual std::vector<double> predict_dist(int x, std::span<const double> z, std::size_t n_y,
                                             CounterRng& rng) const = 0;
    virtual Capability capability() const = 0;
  };

  Predictor() = default;
  explicit Predictor(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  bool can_mean() const;
  bool can_dist() const;
  double predict_mean(int x, std::span<const double> z) const;
  std::vector<double> predict_dist(int x, std::span<const double> z, std::size_t n_y,
                                   CounterRng& rng) const;

 private:
  std::shared_ptr<const Impl> impl_;
};

class PluginHost;

struct FitContext {
  const FrugalSpec* truth = nullptr;  // required by oracle models
  PluginHost* plugin_host = nullptr;  // reuses plugin processes across sequential fits
};

Predictor fit(const ModelSpec& spec, const Dataset& data, const FitContext& ctx = {});

}  // namespace frugal
