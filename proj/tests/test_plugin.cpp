#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "frugal/error.hpp"
#include "frugal/generator.hpp"
#include "frugal/models.hpp"
#include "frugal/plugin.hpp"
#include "frugal/rng.hpp"

using namespace frugal;

namespace {

std::string echo_plugin_path() {
#ifdef FRUGAL_ECHO_PLUGIN
  return FRUGAL_ECHO_PLUGIN;
#else
  return "frugal-echo-plugin";
#endif
}

ModelSpec plugin_spec(std::vector<std::string> extra = {}) {
  ModelSpec spec;
  spec.kind = ModelKind::plugin;
  spec.plugin_command = {echo_plugin_path()};
  for (auto& a : extra) spec.plugin_command.push_back(std::move(a));
  spec.plugin_timeout_s = 20.0;
  return spec;
}

Dataset tiny_data() {
  Dataset ds;
  ds.z = Matrix(4, 1);
  for (int i = 0; i < 4; ++i) {
    ds.z(i, 0) = 0.25 * i;
    ds.x.push_back(i % 2);
    ds.y.push_back(static_cast<double>(i));
  }
  return ds;
}

}  // namespace

TEST_CASE("echo plugin answers the full protocol and predicts zero") {
  const Predictor p = fit_plugin_model(plugin_spec(), tiny_data(), nullptr);
  const std::vector<double> z = {1.25};
  CHECK(p.predict_mean(1, z) == 0.0);
  CHECK(p.can_dist());
  CounterRng rng(61, 0);
  const auto draws = p.predict_dist(1, z, 4, rng);
  CHECK(draws == std::vector<double>{0.0, 0.0, 0.0, 0.0});
}

TEST_CASE("roundtrip transcript matches the golden file byte for byte") {
  const auto transcript = plugin_roundtrip(plugin_spec());
  const std::string text = transcript_text(transcript);
#ifdef FRUGAL_GOLDEN_DIR
  std::ifstream golden(std::string(FRUGAL_GOLDEN_DIR) + "/echo_transcript.golden",
                       std::ios::binary);
  REQUIRE(golden.good());
  std::string want((std::istreambuf_iterator<char>(golden)), std::istreambuf_iterator<char>());
  CHECK(text == want);
#else
  FAIL("golden directory not configured");
#endif
}

TEST_CASE("wrong reply id is a protocol error") {
  CHECK_THROWS_AS((void)plugin_roundtrip(plugin_spec({"--wrong-id"})), ProtocolError);
}

TEST_CASE("plugin crash during fit is contained and diagnosed") {
  try {
    (void)fit_plugin_model(plugin_spec({"--crash-on-fit"}), tiny_data(), nullptr);
    FAIL("expected PluginError");
  } catch (const PluginError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("simulated crash") != std::string::npos);
  }
}

TEST_CASE("nonexistent plugin command fails cleanly") {
  ModelSpec spec;
  spec.kind = ModelKind::plugin;
  spec.plugin_command = {"/nonexistent/plugin-binary"};
  spec.plugin_timeout_s = 10.0;
  CHECK_THROWS_AS((void)fit_plugin_model(spec, tiny_data(), nullptr), PluginError);
}

TEST_CASE("plugin host reuses one process across refits and staleness is caught") {
  PluginHost host;
  const ModelSpec spec = plugin_spec();
  const Predictor p1 = fit_plugin_model(spec, tiny_data(), &host);
  const std::vector<double> z = {0.5};
  CHECK(p1.predict_mean(0, z) == 0.0);
  const Predictor p2 = fit_plugin_model(spec, tiny_data(), &host);
  CHECK(p2.predict_mean(0, z) == 0.0);
  // p1 is now bound to an older fit generation of the shared process
  CHECK_THROWS_AS((void)p1.predict_mean(0, z), PluginError);
}

TEST_CASE("normal-mode plugin emits seeded gaussian samples") {
  const Predictor p =
      fit_plugin_model(plugin_spec({"--mode", "normal", "--mu", "0", "--sd", "1"}), tiny_data(),
                       nullptr);
  CounterRng rng(62, 0);
  const std::vector<double> z = {0.0};
  const auto a = p.predict_dist(1, z, 100, rng);
  CounterRng rng2(62, 0);
  const auto b = p.predict_dist(1, z, 100, rng2);
  CHECK(a == b);  // same derived seed -> same samples
  double mean = 0.0;
  for (double v : a) mean += v;
  CHECK(std::fabs(mean / 100.0) < 0.5);
}
