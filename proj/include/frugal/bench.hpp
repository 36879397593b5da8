#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "frugal/data_table.hpp"
#include "frugal/generator.hpp"
#include "frugal/hyptest.hpp"
#include "frugal/models.hpp"

namespace frugal {

struct CsvSchema {
  std::vector<std::string> covariates;
  std::string treatment;
  std::string outcome;
};

// Typed ingestion of a headered numeric CSV. Missing values and non-binary
// treatment entries are rejected with 1-based row/column coordinates.
DataTable ingest_csv(const std::string& path, const CsvSchema& schema);
std::string ingest_summary(const DataTable& table);

struct ModelEntry {
  ModelSpec spec;
  bool run_mean = false;
  bool run_dist = false;
};

struct SemiSyntheticConfig {
  std::string csv_path;
  CsvSchema schema;
  MarginFamily causal_family = MarginFamily::gamma;
  bool constant_propensity = false;
  bool propensity_weighted = false;
  std::uint64_t fit_seed = 0;
  ShiftConfig shift;  // applied to the fitted test domain to derive the training domain
};

struct ExperimentConfig {
  enum class Mode { synthetic, semi_synthetic };

  Mode mode = Mode::synthetic;
  std::uint64_t seed = 0;
  std::size_t iterations = 50;
  int workers = 0;  // 0 = FRUGAL_BENCH_WORKERS env or hardware concurrency
  std::string output_dir = "out";
  TestConfig test;
  std::vector<ModelEntry> models;

  // synthetic mode: fully assembled generative model
  FrugalSpec spec;
  DomainSpec train_domain;

  // semi-synthetic mode
  SemiSyntheticConfig semi;

  nlohmann::json raw;  // canonical config document (digest + lossless round trip)
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& base_dir);

struct ResultRow {
  std::size_t iteration = 0;  // 1-based
  std::string model;
  std::string test_kind;  // "mean" | "dist"
  std::string target;     // "ate" | "mu(x0)" | "dist(x0)"
  double p_value = 0.0;   // undefined when error is nonempty
  double statistic = 0.0;
  bool degenerate = false;
  std::uint64_t seed = 0;  // per-iteration master
  std::string error;
};

struct ResultsTable {
  std::vector<ResultRow> rows;
};

struct SummaryLine {
  std::string model;
  std::string test_kind;
  std::size_t total = 0;
  std::size_t above = 0;   // p > 0.05
  std::size_t errors = 0;
};

std::vector<SummaryLine> summarize(const ResultsTable& table);

struct RunOutputs {
  ResultsTable table;
  std::string results_csv;
  std::string summary_text;
  nlohmann::json report;
};

RunOutputs run_experiment(const ExperimentConfig& cfg);
void write_outputs(const RunOutputs& out, const std::string& out_dir);

std::string results_to_csv(const ResultsTable& table);
std::string format_double(double v);  // shortest round-trip decimal
std::uint64_t config_digest(const nlohmann::json& canonical);
int resolve_workers(int configured);

}  // namespace frugal
