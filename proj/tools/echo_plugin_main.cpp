// Reference plugin speaking the newline-delimited JSON protocol. Modes:
//   zero            predict_mean -> 0, predict_dist -> zeros (default)
//   mean_const C    predict_mean -> C
//   normal MU SD    predict_dist -> N(MU, SD^2) draws seeded per request
// Misbehavior switches for negative protocol tests:
//   --wrong-id      replies carry id+1
//   --crash-on-fit  exits with status 3 when the fit message arrives

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>

#include <json.hpp>

using nlohmann::json;

namespace {

struct SplitMix {
  std::uint64_t s;
  std::uint64_t next() {
    s += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1p-53; }
};

}  // namespace

int main(int argc, char** argv) {
  std::string mode = "zero";
  double mu = 0.0, sd = 1.0, mean_const = 0.0;
  bool wrong_id = false, crash_on_fit = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--mode" && i + 1 < argc) {
      mode = argv[++i];
    } else if (a == "--mu" && i + 1 < argc) {
      mu = std::atof(argv[++i]);
    } else if (a == "--sd" && i + 1 < argc) {
      sd = std::atof(argv[++i]);
    } else if (a == "--const" && i + 1 < argc) {
      mean_const = std::atof(argv[++i]);
    } else if (a == "--wrong-id") {
      wrong_id = true;
    } else if (a == "--crash-on-fit") {
      crash_on_fit = true;
    } else {
      std::fprintf(stderr, "unknown argument: %s\n", a.c_str());
      return 2;
    }
  }

  std::string line;
  while (std::getline(std::cin, line)) {
    json msg;
    try {
      msg = json::parse(line);
    } catch (...) {
      std::fprintf(stderr, "bad json: %s\n", line.c_str());
      return 2;
    }
    const std::uint64_t id = msg.value("id", 0ULL) + (wrong_id ? 1 : 0);
    const std::string op = msg.value("op", "");
    json reply = {{"id", id}};

    if (op == "handshake") {
      reply["capabilities"] = {"mean", "distributional"};
    } else if (op == "fit") {
      if (crash_on_fit) {
        std::fprintf(stderr, "simulated crash during fit\n");
        return 3;
      }
      reply["ok"] = true;
    } else if (op == "predict_mean") {
      reply["y"] = mode == "mean_const" ? mean_const : (mode == "normal" ? mu : 0.0);
    } else if (op == "predict_dist") {
      const std::size_t n_y = msg.value("n_y", 1ULL);
      SplitMix rng{msg.value("seed", 0ULL)};
      json samples = json::array();
      for (std::size_t k = 0; k < n_y; ++k) {
        double v = 0.0;
        if (mode == "normal") {
          const double u1 = rng.uniform();
          const double u2 = rng.uniform();
          v = mu + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
        }
        samples.push_back(v);
      }
      reply["samples"] = std::move(samples);
    } else if (op == "shutdown") {
      reply["ok"] = true;
      std::cout << reply.dump() << "\n" << std::flush;
      return 0;
    } else {
      reply["error"] = "unknown op \"" + op + "\"";
    }
    std::cout << reply.dump() << "\n" << std::flush;
  }
  return 0;
}
