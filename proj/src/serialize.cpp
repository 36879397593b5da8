#include "frugal/serialize.hpp"

#include "frugal/error.hpp"

namespace frugal::serialize {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

double need_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number()) {
    fail(where + "/" + key, "expected a number");
  }
  return j[key].get<double>();
}

}  // namespace

json margin_to_json(const Margin& m) {
  switch (m.family()) {
    case MarginFamily::normal:
      return {{"family", "normal"}, {"mean", m.normal_mean()}, {"sd", m.normal_sd()}};
    case MarginFamily::gamma:
      return {{"family", "gamma"}, {"shape", m.gamma_shape()}, {"rate", m.gamma_rate()}};
    case MarginFamily::bernoulli:
      return {{"family", "bernoulli"}, {"p", m.bernoulli_p()}};
    case MarginFamily::empirical:
      return {{"family", "empirical"}, {"values", m.values()}};
  }
  throw ParamError("unknown margin family");
}

Margin margin_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("family") || !j["family"].is_string()) {
    fail(where, "margin requires a string field \"family\"");
  }
  const std::string fam = j["family"].get<std::string>();
  static const std::map<std::string, std::vector<std::string>> allowed = {
      {"normal", {"family", "mean", "sd"}},
      {"gamma", {"family", "shape", "rate"}},
      {"bernoulli", {"family", "p"}},
      {"empirical", {"family", "values"}},
  };
  const auto it = allowed.find(fam);
  if (it == allowed.end()) fail(where + "/family", "unknown margin family \"" + fam + "\"");
  for (const auto& [key, val] : j.items()) {
    (void)val;
    if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
      fail(where, "unknown field \"" + key + "\" in " + fam + " margin");
    }
  }
  try {
    if (fam == "normal") {
      return Margin::normal(need_number(j, "mean", where), need_number(j, "sd", where));
    }
    if (fam == "gamma") {
      return Margin::gamma(need_number(j, "shape", where), need_number(j, "rate", where));
    }
    if (fam == "bernoulli") {
      return Margin::bernoulli(need_number(j, "p", where));
    }
    if (!j.contains("values") || !j["values"].is_array() || j["values"].empty()) {
      fail(where + "/values", "empirical margin requires a nonempty array");
    }
    std::vector<double> vals;
    for (const auto& v : j["values"]) {
      if (!v.is_number()) fail(where + "/values", "values must be numbers");
      vals.push_back(v.get<double>());
    }
    return Margin::empirical(std::move(vals));
  } catch (const ParamError& e) {
    fail(where, e.what());
  }
}

json propensity_to_json(const PropensityModel& p) {
  if (p.kind == PropensityModel::Kind::constant) {
    return {{"kind", "constant"}, {"p", p.p}};
  }
  return {{"kind", "logistic"}, {"intercept", p.intercept}, {"weights", p.weights}};
}

PropensityModel propensity_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    fail(where, "propensity requires a string field \"kind\"");
  }
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "constant") {
    for (const auto& [key, val] : j.items()) {
      (void)val;
      if (key != "kind" && key != "p") fail(where, "unknown field \"" + key + "\"");
    }
    try {
      return PropensityModel::constant(need_number(j, "p", where));
    } catch (const ParamError& e) {
      fail(where, e.what());
    }
  }
  if (kind != "logistic") fail(where + "/kind", "unknown propensity kind \"" + kind + "\"");
  for (const auto& [key, val] : j.items()) {
    (void)val;
    if (key != "kind" && key != "intercept" && key != "weights") {
      fail(where, "unknown field \"" + key + "\"");
    }
  }
  if (!j.contains("weights") || !j["weights"].is_array()) {
    fail(where + "/weights", "logistic propensity requires an array of weights");
  }
  std::vector<double> w;
  for (const auto& v : j["weights"]) {
    if (!v.is_number()) fail(where + "/weights", "weights must be numbers");
    w.push_back(v.get<double>());
  }
  return PropensityModel::logistic(need_number(j, "intercept", where), std::move(w));
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t jx = 0; jx < m.cols(); ++jx) row.push_back(m(i, jx));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a nonempty array of rows");
  const std::size_t n = j.size();
  if (!j[0].is_array()) fail(where, "expected an array of arrays");
  const std::size_t c = j[0].size();
  Matrix m(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_array() || j[i].size() != c) {
      fail(where + "/" + std::to_string(i), "ragged matrix row");
    }
    for (std::size_t k = 0; k < c; ++k) {
      if (!j[i][k].is_number()) fail(where, "matrix entries must be numbers");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

json domain_spec_to_json(const DomainSpec& d) {
  json margins = json::array();
  for (const auto& m : d.covariate_margins) margins.push_back(margin_to_json(m));
  return {{"covariate_margins", std::move(margins)},
          {"covariate_copula", matrix_to_json(d.covariate_copula.matrix())},
          {"propensity", propensity_to_json(d.propensity)}};
}

DomainSpec domain_spec_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [key, val] : j.items()) {
    (void)val;
    if (key != "covariate_margins" && key != "covariate_copula" && key != "propensity") {
      fail(where, "unknown field \"" + key + "\"");
    }
  }
  if (!j.contains("covariate_margins") || !j["covariate_margins"].is_array()) {
    fail(where + "/covariate_margins", "expected an array of margins");
  }
  DomainSpec d;
  std::size_t idx = 0;
  for (const auto& mj : j["covariate_margins"]) {
    d.covariate_margins.push_back(
        margin_from_json(mj, where + "/covariate_margins/" + std::to_string(idx++)));
  }
  if (!j.contains("covariate_copula")) fail(where, "missing field \"covariate_copula\"");
  const Matrix cm = matrix_from_json(j["covariate_copula"], where + "/covariate_copula");
  d.covariate_copula = validate_correlation(cm).corr;
  if (!j.contains("propensity")) fail(where, "missing field \"propensity\"");
  d.propensity = propensity_from_json(j["propensity"], where + "/propensity");
  d.validate();
  return d;
}

json frugal_spec_to_json(const FrugalSpec& s) {
  json causal = json::object();
  for (const auto& [x, m] : s.causal_margins) causal[std::to_string(x)] = margin_to_json(m);
  json joints = json::object();
  for (const auto& [x, c] : s.joint_copulas) joints[std::to_string(x)] = matrix_to_json(c.matrix());
  json flags = json::array();
  for (bool b : s.discrete_covariates) flags.push_back(b);
  return {{"test_domain", domain_spec_to_json(s.test_domain)},
          {"causal_margins", std::move(causal)},
          {"joint_copulas", std::move(joints)},
          {"discrete_covariates", std::move(flags)}};
}

FrugalSpec frugal_spec_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [key, val] : j.items()) {
    (void)val;
    if (key != "test_domain" && key != "causal_margins" && key != "joint_copulas" &&
        key != "discrete_covariates") {
      fail(where, "unknown field \"" + key + "\"");
    }
  }
  FrugalSpec s;
  if (!j.contains("test_domain")) fail(where, "missing field \"test_domain\"");
  s.test_domain = domain_spec_from_json(j["test_domain"], where + "/test_domain");
  if (!j.contains("causal_margins") || !j["causal_margins"].is_object()) {
    fail(where + "/causal_margins", "expected an object keyed by treatment level");
  }
  for (const auto& [key, val] : j["causal_margins"].items()) {
    s.causal_margins.emplace(std::stoi(key),
                             margin_from_json(val, where + "/causal_margins/" + key));
  }
  if (!j.contains("joint_copulas") || !j["joint_copulas"].is_object()) {
    fail(where + "/joint_copulas", "expected an object keyed by treatment level");
  }
  for (const auto& [key, val] : j["joint_copulas"].items()) {
    const Matrix m = matrix_from_json(val, where + "/joint_copulas/" + key);
    s.joint_copulas.emplace(std::stoi(key), validate_correlation(m).corr);
  }
  if (j.contains("discrete_covariates")) {
    if (!j["discrete_covariates"].is_array()) {
      fail(where + "/discrete_covariates", "expected an array of booleans");
    }
    for (const auto& v : j["discrete_covariates"]) {
      if (!v.is_boolean()) fail(where + "/discrete_covariates", "expected booleans");
      s.discrete_covariates.push_back(v.get<bool>());
    }
  }
  if (s.discrete_covariates.empty()) s.discrete_covariates.assign(s.dim(), false);
  s.validate();
  return s;
}

}  // namespace frugal::serialize
