#include "frugal/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "frugal/error.hpp"
#include "frugal/kernels.hpp"
#include "frugal/serialize.hpp"

namespace frugal {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t config_digest(const json& canonical) {
  const std::string s = canonical.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int resolve_workers(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("FRUGAL_BENCH_WORKERS"); env != nullptr) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(begin, end, *out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(*out);
}

}  // namespace

DataTable ingest_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open CSV file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IngestError("CSV file is empty: " + path);
  const auto header = split_csv_line(line);
  auto col_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IngestError("CSV is missing declared column \"" + name + "\"");
    return static_cast<std::size_t>(it - header.begin());
  };

  std::vector<std::size_t> zcols;
  for (const auto& name : schema.covariates) zcols.push_back(col_of(name));
  const std::size_t xcol = col_of(schema.treatment);
  const std::size_t ycol = col_of(schema.outcome);

  std::vector<std::vector<double>> zdata(zcols.size());
  std::vector<int> xs;
  std::vector<double> ys;
  std::size_t row_no = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw IngestError("row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                        " cells, header has " + std::to_string(header.size()));
    }
    auto cell_value = [&](std::size_t col, const std::string& name) -> double {
      double v;
      if (!parse_double(cells[col], &v)) {
        throw IngestError("missing or non-numeric value at row " + std::to_string(row_no) +
                          ", column \"" + name + "\" (got \"" + cells[col] + "\")");
      }
      return v;
    };
    for (std::size_t j = 0; j < zcols.size(); ++j) {
      zdata[j].push_back(cell_value(zcols[j], schema.covariates[j]));
    }
    const double xv = cell_value(xcol, schema.treatment);
    if (xv != 0.0 && xv != 1.0) {
      throw IngestError("treatment column \"" + schema.treatment + "\" must be binary; row " +
                        std::to_string(row_no) + " holds " + cells[xcol]);
    }
    xs.push_back(static_cast<int>(xv));
    ys.push_back(cell_value(ycol, schema.outcome));
  }
  if (xs.empty()) throw IngestError("CSV has a header but no data rows: " + path);

  DataTable t;
  t.covariate_names = schema.covariates;
  t.x = std::move(xs);
  t.y = std::move(ys);
  const std::size_t n = t.x.size();
  t.z = Matrix(n, zcols.size());
  t.discrete.resize(zcols.size());
  for (std::size_t j = 0; j < zcols.size(); ++j) {
    bool binary = true;
    for (std::size_t i = 0; i < n; ++i) {
      t.z(i, j) = zdata[j][i];
      binary = binary && (zdata[j][i] == 0.0 || zdata[j][i] == 1.0);
    }
    t.discrete[j] = binary;
  }
  return t;
}

std::string ingest_summary(const DataTable& table) {
  std::ostringstream os;
  os << table.n() << " rows, " << table.dim() << " covariates\n";
  std::size_t treated = 0;
  for (int x : table.x) treated += static_cast<std::size_t>(x);
  os << "treated " << treated << " / " << table.n() << "\n";
  for (std::size_t j = 0; j < table.dim(); ++j) {
    double lo = table.z(0, j), hi = table.z(0, j), sum = 0.0;
    for (std::size_t i = 0; i < table.n(); ++i) {
      lo = std::min(lo, table.z(i, j));
      hi = std::max(hi, table.z(i, j));
      sum += table.z(i, j);
    }
    os << table.covariate_names[j] << (table.discrete[j] ? " [binary]" : "") << ": min "
       << format_double(lo) << " max " << format_double(hi) << " mean "
       << format_double(sum / static_cast<double>(table.n())) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

class SchemaWalker {
 public:
  std::vector<std::string> unknown;

  void check_keys(const json& j, const std::string& ptr,
                  const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(ptr.empty() ? "/" : ptr + ": expected an object");
    for (const auto& [key, val] : j.items()) {
      (void)val;
      if (allowed.count(key) == 0) unknown.push_back(ptr + "/" + key);
    }
  }

  void finish() const {
    if (unknown.empty()) return;
    std::string msg = "unknown field(s) in configuration:";
    for (const auto& u : unknown) msg += " " + u;
    throw ConfigError(msg);
  }
};

double get_number(const json& j, const std::string& ptr, const char* key, double dflt,
                  bool required = false) {
  if (!j.contains(key)) {
    if (required) throw ConfigError(ptr + "/" + key + ": required field is missing");
    return dflt;
  }
  if (!j[key].is_number()) throw ConfigError(ptr + "/" + key + ": expected a number");
  return j[key].get<double>();
}

std::size_t get_count(const json& j, const std::string& ptr, const char* key, std::size_t dflt) {
  const double v = get_number(j, ptr, key, static_cast<double>(dflt));
  if (!(v >= 1.0) || v != std::floor(v)) {
    throw ConfigError(ptr + "/" + key + ": expected an integer >= 1");
  }
  return static_cast<std::size_t>(v);
}

std::string get_string(const json& j, const std::string& ptr, const char* key,
                       const std::string& dflt, bool required = false) {
  if (!j.contains(key)) {
    if (required) throw ConfigError(ptr + "/" + key + ": required field is missing");
    return dflt;
  }
  if (!j[key].is_string()) throw ConfigError(ptr + "/" + key + ": expected a string");
  return j[key].get<std::string>();
}

bool get_bool(const json& j, const std::string& ptr, const char* key, bool dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_boolean()) throw ConfigError(ptr + "/" + key + ": expected a boolean");
  return j[key].get<bool>();
}

TestConfig parse_test_config(const json& j, SchemaWalker& walker) {
  TestConfig cfg;
  if (j.is_null()) return cfg;
  walker.check_keys(j, "/test",
                    {"n_bootstrap", "n_train", "n_test", "n_y", "target", "x0", "dist_test",
                     "pooled_cap"});
  cfg.n_bootstrap = get_count(j, "/test", "n_bootstrap", cfg.n_bootstrap);
  cfg.n_train = get_count(j, "/test", "n_train", cfg.n_train);
  cfg.n_test = get_count(j, "/test", "n_test", cfg.n_test);
  cfg.n_y = get_count(j, "/test", "n_y", cfg.n_y);
  cfg.pooled_cap = get_count(j, "/test", "pooled_cap", cfg.pooled_cap);
  const std::string target = get_string(j, "/test", "target", "ate");
  if (target == "ate") {
    cfg.target = TestTarget::ate;
  } else if (target == "mu_at_x0") {
    cfg.target = TestTarget::mu_at_x0;
  } else {
    throw ConfigError("/test/target: must be \"ate\" or \"mu_at_x0\"");
  }
  cfg.x0 = static_cast<int>(get_number(j, "/test", "x0", 1));
  const std::string dk = get_string(j, "/test", "dist_test", "ks");
  if (dk == "ks") {
    cfg.dist_test = DistTestKind::ks;
  } else if (dk == "cvm") {
    cfg.dist_test = DistTestKind::cvm;
  } else {
    throw ConfigError("/test/dist_test: must be \"ks\" or \"cvm\"");
  }
  cfg.validate();
  return cfg;
}

Matrix spearman_json_to_pearson(const json& j, const std::string& ptr, std::size_t dim) {
  const Matrix s = serialize::matrix_from_json(j, ptr);
  if (s.rows() != dim || s.cols() != dim) {
    throw ConfigError(ptr + ": expected a " + std::to_string(dim) + "x" + std::to_string(dim) +
                      " matrix");
  }
  Matrix p(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    p(i, i) = 1.0;
    for (std::size_t k = i + 1; k < dim; ++k) {
      if (!(s(i, k) >= -1.0 && s(i, k) <= 1.0)) {
        throw ConfigError(ptr + ": Spearman entries must lie in [-1,1]");
      }
      const double v = spearman_to_pearson(s(i, k));
      p(i, k) = v;
      p(k, i) = v;
    }
  }
  return p;
}

std::vector<ModelEntry> parse_models(const json& j, SchemaWalker& walker,
                                     const std::string& base_dir) {
  if (!j.is_array() || j.empty()) throw ConfigError("/models: expected a nonempty array");
  std::vector<ModelEntry> out;
  std::size_t idx = 0;
  for (const auto& mj : j) {
    const std::string ptr = "/models/" + std::to_string(idx++);
    walker.check_keys(mj, ptr,
                      {"kind", "label", "tests", "knn_k", "bias", "command", "env", "timeout_s"});
    ModelEntry e;
    e.spec.kind = model_kind_from_name(get_string(mj, ptr, "kind", "", true));
    e.spec.label = get_string(mj, ptr, "label", "");
    e.spec.knn_k = static_cast<int>(get_number(mj, ptr, "knn_k", 5));
    e.spec.oracle_bias = get_number(mj, ptr, "bias", 0.0);
    e.spec.plugin_timeout_s = get_number(mj, ptr, "timeout_s", 300.0);
    if (mj.contains("command")) {
      if (!mj["command"].is_array()) throw ConfigError(ptr + "/command: expected an array");
      for (const auto& c : mj["command"]) {
        if (!c.is_string()) throw ConfigError(ptr + "/command: expected strings");
        std::string arg = c.get<std::string>();
        // resolve a leading relative path against the config directory
        if (e.spec.plugin_command.empty() && !arg.empty() && arg.front() != '/' &&
            arg.find('/') != std::string::npos) {
          arg = base_dir + "/" + arg;
        }
        e.spec.plugin_command.push_back(std::move(arg));
      }
    }
    if (mj.contains("env")) {
      if (!mj["env"].is_object()) throw ConfigError(ptr + "/env: expected an object");
      for (const auto& [k, v] : mj["env"].items()) {
        if (!v.is_string()) throw ConfigError(ptr + "/env: values must be strings");
        e.spec.plugin_env[k] = v.get<std::string>();
      }
    }
    try {
      e.spec.validate();
    } catch (const ParamError& ex) {
      throw ConfigError(ptr + ": " + ex.what());
    }

    const Capability cap = e.spec.capability();
    e.run_mean = cap == Capability::mean || cap == Capability::both;
    e.run_dist = cap == Capability::distributional || cap == Capability::both;
    if (mj.contains("tests")) {
      if (!mj["tests"].is_array()) throw ConfigError(ptr + "/tests: expected an array");
      e.run_mean = false;
      e.run_dist = false;
      for (const auto& t : mj["tests"]) {
        const std::string s = t.is_string() ? t.get<std::string>() : "";
        if (s == "mean") {
          e.run_mean = true;
        } else if (s == "dist") {
          e.run_dist = true;
        } else {
          throw ConfigError(ptr + "/tests: entries must be \"mean\" or \"dist\"");
        }
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

void parse_synthetic(const json& j, SchemaWalker& walker, ExperimentConfig& cfg) {
  walker.check_keys(j, "/synthetic",
                    {"covariates", "covariate_spearman", "train_covariate_spearman",
                     "causal_margins", "outcome_spearman", "test_propensity", "train_propensity",
                     "discrete"});
  if (!j.contains("covariates") || !j["covariates"].is_array() || j["covariates"].empty()) {
    throw ConfigError("/synthetic/covariates: expected a nonempty array");
  }
  std::vector<std::string> names;
  std::vector<Margin> test_margins, train_margins;
  std::size_t idx = 0;
  for (const auto& cj : j["covariates"]) {
    const std::string ptr = "/synthetic/covariates/" + std::to_string(idx++);
    walker.check_keys(cj, ptr, {"name", "test", "train"});
    names.push_back(get_string(cj, ptr, "name", "z" + std::to_string(idx)));
    if (!cj.contains("test")) throw ConfigError(ptr + "/test: required margin is missing");
    test_margins.push_back(serialize::margin_from_json(cj["test"], ptr + "/test"));
    train_margins.push_back(cj.contains("train")
                                ? serialize::margin_from_json(cj["train"], ptr + "/train")
                                : test_margins.back());
  }
  const std::size_t d = names.size();

  Matrix test_copula = Matrix::identity(d);
  if (j.contains("covariate_spearman")) {
    test_copula = spearman_json_to_pearson(j["covariate_spearman"], "/synthetic/covariate_spearman", d);
  }
  Matrix train_copula = test_copula;
  if (j.contains("train_covariate_spearman")) {
    train_copula = spearman_json_to_pearson(j["train_covariate_spearman"],
                                            "/synthetic/train_covariate_spearman", d);
  }

  PropensityModel test_prop = PropensityModel::constant(0.5);
  if (j.contains("test_propensity")) {
    test_prop = serialize::propensity_from_json(j["test_propensity"], "/synthetic/test_propensity");
  }
  PropensityModel train_prop = test_prop;
  if (j.contains("train_propensity")) {
    train_prop =
        serialize::propensity_from_json(j["train_propensity"], "/synthetic/train_propensity");
  }

  if (!j.contains("causal_margins") || !j["causal_margins"].is_object()) {
    throw ConfigError("/synthetic/causal_margins: expected an object keyed by treatment level");
  }
  std::map<int, Margin> causal;
  for (const auto& [key, val] : j["causal_margins"].items()) {
    if (key != "0" && key != "1") {
      throw ConfigError("/synthetic/causal_margins: keys must be \"0\" or \"1\"");
    }
    causal.emplace(std::stoi(key),
                   serialize::margin_from_json(val, "/synthetic/causal_margins/" + key));
  }
  if (causal.size() != 2) {
    throw ConfigError("/synthetic/causal_margins: both treatment levels 0 and 1 are required");
  }

  if (!j.contains("outcome_spearman")) {
    throw ConfigError("/synthetic/outcome_spearman: required field is missing");
  }
  std::map<int, std::vector<double>> outcome;
  auto parse_rho = [&](const json& arr, const std::string& ptr) {
    if (!arr.is_array() || arr.size() != d) {
      throw ConfigError(ptr + ": expected an array of length " + std::to_string(d));
    }
    std::vector<double> rho;
    for (const auto& v : arr) {
      if (!v.is_number()) throw ConfigError(ptr + ": entries must be numbers");
      rho.push_back(spearman_to_pearson(v.get<double>()));
    }
    return rho;
  };
  if (j["outcome_spearman"].is_array()) {
    const auto rho = parse_rho(j["outcome_spearman"], "/synthetic/outcome_spearman");
    outcome.emplace(0, rho);
    outcome.emplace(1, rho);
  } else if (j["outcome_spearman"].is_object()) {
    for (const auto& [key, val] : j["outcome_spearman"].items()) {
      if (key != "0" && key != "1") {
        throw ConfigError("/synthetic/outcome_spearman: keys must be \"0\" or \"1\"");
      }
      outcome.emplace(std::stoi(key), parse_rho(val, "/synthetic/outcome_spearman/" + key));
    }
    if (outcome.size() != 2) {
      throw ConfigError("/synthetic/outcome_spearman: both treatment levels are required");
    }
  } else {
    throw ConfigError("/synthetic/outcome_spearman: expected an array or an object");
  }

  std::vector<bool> flags(d, false);
  if (j.contains("discrete")) {
    if (!j["discrete"].is_array()) throw ConfigError("/synthetic/discrete: expected an array");
    for (const auto& v : j["discrete"]) {
      const std::string name = v.is_string() ? v.get<std::string>() : "";
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) {
        throw ConfigError("/synthetic/discrete: \"" + name + "\" is not a covariate name");
      }
      flags[static_cast<std::size_t>(it - names.begin())] = true;
    }
  }

  DomainSpec test_domain;
  test_domain.covariate_margins = std::move(test_margins);
  test_domain.covariate_copula = validate_correlation(test_copula).corr;
  test_domain.propensity = test_prop;

  try {
    cfg.spec = FrugalSpec::build(std::move(test_domain), std::move(causal), std::move(outcome),
                                 std::move(flags));
  } catch (const Error& e) {
    throw ConfigError(std::string("/synthetic: ") + e.what());
  }

  cfg.train_domain.covariate_margins = std::move(train_margins);
  cfg.train_domain.covariate_copula = validate_correlation(train_copula).corr;
  cfg.train_domain.propensity = train_prop;
  cfg.train_domain.validate();
}

void parse_semi(const json& j, SchemaWalker& walker, const std::string& base_dir,
                ExperimentConfig& cfg) {
  walker.check_keys(j, "/semi_synthetic",
                    {"csv", "covariates", "treatment", "outcome", "causal_family", "propensity",
                     "propensity_weighted", "fit_seed", "shift"});
  SemiSyntheticConfig& s = cfg.semi;
  std::string csv = get_string(j, "/semi_synthetic", "csv", "", true);
  if (!csv.empty() && csv.front() != '/') csv = base_dir + "/" + csv;
  if (!std::filesystem::exists(csv)) {
    throw ConfigError("/semi_synthetic/csv: file does not exist: " + csv);
  }
  s.csv_path = csv;
  if (!j.contains("covariates") || !j["covariates"].is_array() || j["covariates"].empty()) {
    throw ConfigError("/semi_synthetic/covariates: expected a nonempty array of column names");
  }
  for (const auto& v : j["covariates"]) {
    if (!v.is_string()) throw ConfigError("/semi_synthetic/covariates: entries must be strings");
    s.schema.covariates.push_back(v.get<std::string>());
  }
  s.schema.treatment = get_string(j, "/semi_synthetic", "treatment", "", true);
  s.schema.outcome = get_string(j, "/semi_synthetic", "outcome", "", true);
  const std::string fam = get_string(j, "/semi_synthetic", "causal_family", "gamma");
  if (fam == "gamma") {
    s.causal_family = MarginFamily::gamma;
  } else if (fam == "normal") {
    s.causal_family = MarginFamily::normal;
  } else {
    throw ConfigError("/semi_synthetic/causal_family: must be \"gamma\" or \"normal\"");
  }
  const std::string prop = get_string(j, "/semi_synthetic", "propensity", "logistic");
  if (prop == "constant") {
    s.constant_propensity = true;
  } else if (prop == "logistic") {
    s.constant_propensity = false;
  } else {
    throw ConfigError("/semi_synthetic/propensity: must be \"logistic\" or \"constant\"");
  }
  s.propensity_weighted = get_bool(j, "/semi_synthetic", "propensity_weighted", false);
  s.fit_seed = static_cast<std::uint64_t>(get_number(j, "/semi_synthetic", "fit_seed", 0.0));

  if (j.contains("shift")) {
    const json& sh = j["shift"];
    walker.check_keys(sh, "/semi_synthetic/shift", {"scale", "replace_propensity"});
    if (sh.contains("scale")) {
      if (!sh["scale"].is_array()) {
        throw ConfigError("/semi_synthetic/shift/scale: expected an array");
      }
      std::size_t idx = 0;
      for (const auto& a : sh["scale"]) {
        const std::string ptr = "/semi_synthetic/shift/scale/" + std::to_string(idx++);
        walker.check_keys(a, ptr, {"covariate", "factor"});
        const std::string name = get_string(a, ptr, "covariate", "", true);
        const auto it = std::find(s.schema.covariates.begin(), s.schema.covariates.end(), name);
        if (it == s.schema.covariates.end()) {
          throw ConfigError(ptr + "/covariate: \"" + name + "\" is not a declared covariate");
        }
        ShiftAction act;
        act.kind = ShiftAction::Kind::scale_covariate;
        act.covariate = static_cast<std::size_t>(it - s.schema.covariates.begin());
        act.factor = get_number(a, ptr, "factor", 1.0, true);
        if (!(act.factor > 0.0)) throw ConfigError(ptr + "/factor: must be positive");
        s.shift.actions.push_back(std::move(act));
      }
    }
    if (sh.contains("replace_propensity")) {
      ShiftAction act;
      act.kind = ShiftAction::Kind::replace_propensity;
      act.propensity = serialize::propensity_from_json(sh["replace_propensity"],
                                                       "/semi_synthetic/shift/replace_propensity");
      s.shift.actions.push_back(std::move(act));
    }
  }
}

}  // namespace

ExperimentConfig config_from_json(const json& j, const std::string& base_dir) {
  SchemaWalker walker;
  walker.check_keys(j, "",
                    {"mode", "seed", "iterations", "workers", "output_dir", "test", "models",
                     "synthetic", "semi_synthetic"});

  ExperimentConfig cfg;
  const std::string mode = get_string(j, "", "mode", "", true);
  if (mode == "synthetic") {
    cfg.mode = ExperimentConfig::Mode::synthetic;
  } else if (mode == "semi_synthetic") {
    cfg.mode = ExperimentConfig::Mode::semi_synthetic;
  } else {
    throw ConfigError("/mode: must be \"synthetic\" or \"semi_synthetic\"");
  }
  const double seed = get_number(j, "", "seed", 0.0);
  if (seed < 0.0 || seed != std::floor(seed)) {
    throw ConfigError("/seed: expected a nonnegative integer");
  }
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.iterations = get_count(j, "", "iterations", 50);
  const double workers = get_number(j, "", "workers", 0.0);
  if (workers < 0.0 || workers != std::floor(workers)) {
    throw ConfigError("/workers: expected a nonnegative integer");
  }
  cfg.workers = static_cast<int>(workers);
  cfg.output_dir = get_string(j, "", "output_dir", "out");
  cfg.test = parse_test_config(j.contains("test") ? j["test"] : json(), walker);
  if (!j.contains("models")) throw ConfigError("/models: required field is missing");
  cfg.models = parse_models(j["models"], walker, base_dir);

  if (cfg.mode == ExperimentConfig::Mode::synthetic) {
    if (!j.contains("synthetic")) {
      throw ConfigError("/synthetic: required in synthetic mode");
    }
    parse_synthetic(j["synthetic"], walker, cfg);
  } else {
    if (!j.contains("semi_synthetic")) {
      throw ConfigError("/semi_synthetic: required in semi_synthetic mode");
    }
    parse_semi(j["semi_synthetic"], walker, base_dir, cfg);
  }
  walker.finish();
  cfg.raw = j;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return config_from_json(j, dir.empty() ? "." : dir);
}

// ---------------------------------------------------------------------------
// Experiment orchestration
// ---------------------------------------------------------------------------

namespace {

struct Task {
  std::size_t iteration;  // 1-based
  std::size_t model_idx;
  bool dist;
};

std::string target_name(const TestConfig& cfg, bool dist) {
  if (dist) return "dist(" + std::to_string(cfg.x0) + ")";
  if (cfg.target == TestTarget::ate) return "ate";
  return "mu(" + std::to_string(cfg.x0) + ")";
}

}  // namespace

std::vector<SummaryLine> summarize(const ResultsTable& table) {
  std::vector<SummaryLine> lines;
  auto find_line = [&](const std::string& model, const std::string& kind) -> SummaryLine& {
    for (auto& l : lines) {
      if (l.model == model && l.test_kind == kind) return l;
    }
    lines.push_back({model, kind, 0, 0, 0});
    return lines.back();
  };
  for (const auto& r : table.rows) {
    auto& l = find_line(r.model, r.test_kind);
    if (!r.error.empty()) {
      ++l.errors;
      continue;
    }
    ++l.total;
    if (r.p_value > 0.05) ++l.above;
  }
  return lines;
}

std::string results_to_csv(const ResultsTable& table) {
  std::string out = "iteration,model,test,target,p_value,statistic,degenerate,seed,error\n";
  for (const auto& r : table.rows) {
    out += std::to_string(r.iteration);
    out += ',';
    out += r.model;
    out += ',';
    out += r.test_kind;
    out += ',';
    out += r.target;
    out += ',';
    if (r.error.empty()) out += format_double(r.p_value);
    out += ',';
    if (r.error.empty()) out += format_double(r.statistic);
    out += ',';
    out += r.degenerate ? '1' : '0';
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    if (!r.error.empty()) {
      std::string esc = r.error;
      for (auto& c : esc) {
        if (c == ',' || c == '\n' || c == '"') c = ';';
      }
      out += '"';
      out += esc;
      out += '"';
    }
    out += '\n';
  }
  return out;
}

RunOutputs run_experiment(const ExperimentConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();

  FrugalSpec spec;
  DomainSpec train_domain;
  std::string ingest_log;
  if (cfg.mode == ExperimentConfig::Mode::synthetic) {
    spec = cfg.spec;
    train_domain = cfg.train_domain;
  } else {
    const DataTable table = ingest_csv(cfg.semi.csv_path, cfg.semi.schema);
    ingest_log = ingest_summary(table);
    FrugalFitOptions opts;
    opts.causal_family = cfg.semi.causal_family;
    opts.constant_propensity = cfg.semi.constant_propensity;
    opts.propensity_weighted_margins = cfg.semi.propensity_weighted;
    opts.seed = cfg.semi.fit_seed;
    spec = fit_frugal_from_data(table, opts);
    train_domain = apply_shift(spec.test_domain, cfg.semi.shift);
  }
  spec.validate();

  const int workers = resolve_workers(cfg.workers);
  const std::size_t T = cfg.iterations;

  std::vector<Task> tasks;
  for (std::size_t t = 1; t <= T; ++t) {
    for (std::size_t m = 0; m < cfg.models.size(); ++m) {
      if (cfg.models[m].run_mean) tasks.push_back({t, m, false});
      if (cfg.models[m].run_dist) tasks.push_back({t, m, true});
    }
  }

  std::vector<ResultRow> rows(tasks.size());
  // Outer parallelism across tasks; the bootstrap loop inside each test then
  // runs single-threaded. With one task, parallelize the bootstraps instead.
  const bool outer_parallel = tasks.size() > 1;
  TestConfig test_cfg = cfg.test;
  test_cfg.workers = outer_parallel ? 1 : workers;

  std::atomic<std::size_t> next{0};
  auto run_task = [&](std::size_t idx) {
    const Task& task = tasks[idx];
    const ModelEntry& entry = cfg.models[task.model_idx];
    ResultRow row;
    row.iteration = task.iteration;
    row.model = entry.spec.name();
    row.test_kind = task.dist ? "dist" : "mean";
    row.target = target_name(cfg.test, task.dist);
    row.seed = derive_key(cfg.seed, task.iteration);
    try {
      const TestReport rep =
          task.dist ? dist_regression_test(spec, train_domain, entry.spec, test_cfg, row.seed)
                    : mean_regression_test(spec, train_domain, entry.spec, test_cfg, row.seed);
      row.p_value = rep.p_value;
      row.statistic = rep.statistic;
      row.degenerate = rep.degenerate;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows[idx] = std::move(row);
  };

  if (outer_parallel && workers > 1) {
    std::vector<std::thread> pool;
    const int nw = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(workers), tasks.size()));
    for (int w = 0; w < nw; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t idx = next.fetch_add(1);
          if (idx >= tasks.size()) return;
          run_task(idx);
        }
      });
    }
    for (auto& th : pool) th.join();
  } else {
    for (std::size_t idx = 0; idx < tasks.size(); ++idx) run_task(idx);
  }

  RunOutputs out;
  out.table.rows = std::move(rows);
  out.results_csv = results_to_csv(out.table);

  const auto lines = summarize(out.table);
  std::ostringstream sum;
  sum << "p > 0.05 rates over " << T << " iterations\n";
  for (const auto& l : lines) {
    sum << l.model << "," << l.test_kind << ": ";
    if (l.total > 0) {
      const double pct = 100.0 * static_cast<double>(l.above) / static_cast<double>(l.total);
      sum << format_double(pct) << "% (" << l.above << "/" << l.total << ")";
    } else {
      sum << "no successful runs";
    }
    if (l.errors > 0) sum << " [" << l.errors << " errors]";
    sum << "\n";
  }
  out.summary_text = sum.str();

  const auto t_end = std::chrono::steady_clock::now();
  json report;
  report["tool"] = "frugal-bench";
  report["config_digest"] = config_digest(cfg.raw);
  report["iterations"] = T;
  report["workers"] = workers;
  report["kernel_path"] = kernels::active_path();
  report["rows"] = out.table.rows.size();
  report["wall_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t_end - t_start).count();
  std::size_t errors = 0;
  for (const auto& r : out.table.rows) errors += r.error.empty() ? 0 : 1;
  report["errors"] = errors;
  if (!ingest_log.empty()) report["ingest"] = ingest_log;
  json jsum = json::array();
  for (const auto& l : lines) {
    jsum.push_back({{"model", l.model},
                    {"test", l.test_kind},
                    {"total", l.total},
                    {"p_above_0.05", l.above},
                    {"errors", l.errors}});
  }
  report["summary"] = std::move(jsum);
  out.report = std::move(report);
  return out;
}

void write_outputs(const RunOutputs& out, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream f(out_dir + "/results.csv", std::ios::binary);
    if (!f) throw Error("cannot write " + out_dir + "/results.csv");
    f << out.results_csv;
  }
  {
    std::ofstream f(out_dir + "/summary.txt", std::ios::binary);
    f << out.summary_text;
  }
  {
    std::ofstream f(out_dir + "/report.json", std::ios::binary);
    f << out.report.dump(2) << "\n";
  }
}

}  // namespace frugal
