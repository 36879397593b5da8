#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "frugal/generator.hpp"
#include "frugal/models.hpp"

namespace frugal {

// One line of the wire exchange; '>' host-to-plugin, '<' plugin-to-host.
struct TranscriptEntry {
  char dir;
  std::string line;
};

std::string transcript_text(const std::vector<TranscriptEntry>& transcript);

// A single external regressor process speaking newline-delimited JSON on
// stdin/stdout. Single-lane: one outstanding request at a time. Never shared
// across threads; parallel bootstrap workers each own their processes.
class PluginProcess {
 public:
  PluginProcess(std::vector<std::string> command, std::map<std::string, std::string> env,
                double timeout_s);
  ~PluginProcess();
  PluginProcess(const PluginProcess&) = delete;
  PluginProcess& operator=(const PluginProcess&) = delete;

  // Handshake (run once, cached): returns the declared capabilities.
  const std::vector<std::string>& handshake();

  void fit_data(const Dataset& data);
  double predict_mean(int x, std::span<const double> z);
  std::vector<double> predict_dist(int x, std::span<const double> z, std::size_t n_y,
                                   std::uint64_t seed);
  void shutdown();

  // Increments every fit; predictors bound to an older generation refuse to
  // answer (the process has been refit under them).
  std::uint64_t fit_generation() const { return fit_generation_; }

  // When set, every request/reply line is appended to the sink.
  void record_transcript(std::vector<TranscriptEntry>* sink) { transcript_ = sink; }

 private:
  struct Io;
  std::string run_request(const std::string& line);
  std::unique_ptr<Io> io_;
  std::vector<std::string> capabilities_;
  bool handshaken_ = false;
  std::uint64_t fit_generation_ = 0;
  std::uint64_t next_id_ = 1;
  std::vector<TranscriptEntry>* transcript_ = nullptr;
  friend Predictor fit_plugin_model(const ModelSpec&, const Dataset&, PluginHost*);
};

// Per-worker cache of live plugin processes, keyed by command line, so
// sequential bootstrap refits reuse one process instead of respawning.
// Not thread-safe by design.
class PluginHost {
 public:
  PluginHost() = default;
  ~PluginHost();

  std::shared_ptr<PluginProcess> acquire(const ModelSpec& spec);
  void shutdown_all();

 private:
  std::map<std::string, std::shared_ptr<PluginProcess>> procs_;
};

Predictor fit_plugin_model(const ModelSpec& spec, const Dataset& data, PluginHost* host);

// handshake -> fit -> predict_mean -> predict_dist -> shutdown against a
// fixed fixture dataset; returns the full transcript for golden comparison.
std::vector<TranscriptEntry> plugin_roundtrip(const ModelSpec& spec);

}  // namespace frugal
