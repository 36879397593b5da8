#include "frugal/plugin.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>

#include <json.hpp>

#include "frugal/error.hpp"

namespace frugal {

using nlohmann::json;

std::string transcript_text(const std::vector<TranscriptEntry>& transcript) {
  std::string out;
  for (const auto& e : transcript) {
    out += e.dir;
    out += ' ';
    out += e.line;
    out += '\n';
  }
  return out;
}

namespace {

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

[[noreturn]] void child_exec(const std::vector<std::string>& command,
                             const std::map<std::string, std::string>& env, int in_fd,
                             int out_fd, int err_fd) {
  ::dup2(in_fd, STDIN_FILENO);
  ::dup2(out_fd, STDOUT_FILENO);
  ::dup2(err_fd, STDERR_FILENO);
  for (int fd = 3; fd < 256; ++fd) ::close(fd);
  for (const auto& [k, v] : env) ::setenv(k.c_str(), v.c_str(), 1);
  std::vector<char*> argv;
  argv.reserve(command.size() + 1);
  for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  ::execvp(argv[0], argv.data());
  ::fprintf(stderr, "exec failed: %s: %s\n", argv[0], std::strerror(errno));
  ::_exit(127);
}

}  // namespace

struct PluginProcess::Io {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  int child_err = -1;
  double timeout_s = 300.0;
  std::string cmd_label;
  std::string read_buf;
  std::string err_buf;
  bool dead = false;

  void drain_stderr() {
    char tmp[4096];
    while (true) {
      const ssize_t k = ::read(child_err, tmp, sizeof tmp);
      if (k <= 0) break;
      if (err_buf.size() < 65536) err_buf.append(tmp, static_cast<std::size_t>(k));
    }
  }

  std::string diagnostics() {
    drain_stderr();
    int status = 0;
    std::string d;
    if (pid > 0 && ::waitpid(pid, &status, WNOHANG) == pid) {
      pid = -1;
      if (WIFEXITED(status)) {
        d = "exit status " + std::to_string(WEXITSTATUS(status));
      } else if (WIFSIGNALED(status)) {
        d = "killed by signal " + std::to_string(WTERMSIG(status));
      }
    }
    if (!err_buf.empty()) {
      d += d.empty() ? "stderr: " : "; stderr: ";
      d += err_buf;
    }
    return d.empty() ? "no diagnostics captured" : d;
  }

  void kill_child() {
    if (pid > 0) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
      pid = -1;
    }
    dead = true;
  }

  ~Io() {
    if (to_child >= 0) ::close(to_child);
    if (from_child >= 0) ::close(from_child);
    if (child_err >= 0) ::close(child_err);
    if (pid > 0) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
    }
  }
};

PluginProcess::PluginProcess(std::vector<std::string> command,
                             std::map<std::string, std::string> env, double timeout_s) {
  if (command.empty()) throw ParamError("plugin command must not be empty");
  ignore_sigpipe_once();

  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0) {
    throw PluginError("pipe creation failed: " + std::string(std::strerror(errno)));
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw PluginError("fork failed: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);
    child_exec(command, env, in_pipe[0], out_pipe[1], err_pipe[1]);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);

  io_ = std::make_unique<Io>();
  io_->pid = pid;
  io_->to_child = in_pipe[1];
  io_->from_child = out_pipe[0];
  io_->child_err = err_pipe[0];
  io_->timeout_s = timeout_s;
  io_->cmd_label = command.front();
  ::fcntl(io_->from_child, F_SETFL, O_NONBLOCK);
  ::fcntl(io_->child_err, F_SETFL, O_NONBLOCK);
}

PluginProcess::~PluginProcess() {
  try {
    shutdown();
  } catch (...) {
    if (io_) io_->kill_child();
  }
}

std::string PluginProcess::run_request(const std::string& line) {
  if (!io_ || io_->dead) throw PluginError("plugin process is not running");
  if (transcript_ != nullptr) transcript_->push_back({'>', line});

  // Write the request line.
  std::string payload = line;
  payload += '\n';
  std::size_t off = 0;
  while (off < payload.size()) {
    const ssize_t k = ::write(io_->to_child, payload.data() + off, payload.size() - off);
    if (k < 0) {
      if (errno == EINTR) continue;
      const std::string diag = io_->diagnostics();
      io_->kill_child();
      throw PluginError("plugin '" + io_->cmd_label + "' write failed (" +
                        std::strerror(errno) + "); " + diag);
    }
    off += static_cast<std::size_t>(k);
  }

  // Read one reply line, polling with the configured timeout.
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::duration<double>(io_->timeout_s);
  while (true) {
    const auto nl = io_->read_buf.find('\n');
    if (nl != std::string::npos) {
      std::string reply = io_->read_buf.substr(0, nl);
      io_->read_buf.erase(0, nl + 1);
      if (!reply.empty() && reply.back() == '\r') reply.pop_back();
      if (transcript_ != nullptr) transcript_->push_back({'<', reply});
      return reply;
    }
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      const std::string diag = io_->diagnostics();
      io_->kill_child();
      throw PluginError("plugin '" + io_->cmd_label + "' timed out after " +
                        std::to_string(io_->timeout_s) + " s; " + diag);
    }
    const int wait_ms = static_cast<int>(std::min<long long>(
        250, std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1));
    struct pollfd fds[2];
    fds[0] = {io_->from_child, POLLIN, 0};
    fds[1] = {io_->child_err, POLLIN, 0};
    const int pr = ::poll(fds, 2, wait_ms);
    if (pr < 0 && errno != EINTR) {
      throw PluginError("poll failed: " + std::string(std::strerror(errno)));
    }
    io_->drain_stderr();
    if (fds[0].revents & POLLIN) {
      char tmp[8192];
      while (true) {
        const ssize_t k = ::read(io_->from_child, tmp, sizeof tmp);
        if (k > 0) {
          io_->read_buf.append(tmp, static_cast<std::size_t>(k));
        } else {
          break;
        }
      }
    }
    if ((fds[0].revents & (POLLHUP | POLLERR)) && io_->read_buf.find('\n') == std::string::npos) {
      const std::string diag = io_->diagnostics();
      io_->kill_child();
      throw PluginError("plugin '" + io_->cmd_label + "' exited before replying; " + diag);
    }
  }
}

namespace {

json parse_reply(const std::string& reply, std::uint64_t expect_id) {
  json j;
  try {
    j = json::parse(reply);
  } catch (const json::exception& e) {
    throw ProtocolError("malformed plugin reply (not JSON): " + std::string(e.what()));
  }
  if (!j.is_object()) throw ProtocolError("plugin reply is not a JSON object");
  if (!j.contains("id") || !j["id"].is_number()) {
    throw ProtocolError("plugin reply missing numeric field \"id\"");
  }
  const auto got = j["id"].get<std::uint64_t>();
  if (got != expect_id) {
    throw ProtocolError("plugin reply id " + std::to_string(got) +
                        " does not match request id " + std::to_string(expect_id));
  }
  return j;
}

}  // namespace

const std::vector<std::string>& PluginProcess::handshake() {
  if (handshaken_) return capabilities_;
  const std::uint64_t id = next_id_++;
  json msg = {{"id", id}, {"op", "handshake"}};
  const json reply = parse_reply(run_request(msg.dump()), id);
  if (!reply.contains("capabilities") || !reply["capabilities"].is_array()) {
    throw ProtocolError("handshake reply missing array field \"capabilities\"");
  }
  capabilities_.clear();
  for (const auto& c : reply["capabilities"]) {
    if (!c.is_string()) throw ProtocolError("handshake field \"capabilities\" must hold strings");
    const std::string s = c.get<std::string>();
    if (s != "mean" && s != "distributional") {
      throw ProtocolError("handshake capability \"" + s + "\" is not recognized");
    }
    capabilities_.push_back(s);
  }
  if (capabilities_.empty()) throw ProtocolError("handshake declared no capabilities");
  handshaken_ = true;
  return capabilities_;
}

void PluginProcess::fit_data(const Dataset& data) {
  const std::size_t d = data.dim();
  json columns = json::array();
  for (std::size_t j = 0; j < d; ++j) columns.push_back("z" + std::to_string(j + 1));
  columns.push_back("x");
  columns.push_back("y");
  json rows = json::array();
  for (std::size_t i = 0; i < data.n(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < d; ++j) row.push_back(data.z(i, j));
    row.push_back(data.x[i]);
    row.push_back(data.y[i]);
    rows.push_back(std::move(row));
  }
  const std::uint64_t id = next_id_++;
  json msg = {{"id", id},
              {"op", "fit"},
              {"columns", std::move(columns)},
              {"rows", std::move(rows)},
              {"treatment_col", "x"},
              {"outcome_col", "y"}};
  const json reply = parse_reply(run_request(msg.dump()), id);
  if (!reply.contains("ok") || !reply["ok"].is_boolean()) {
    throw ProtocolError("fit reply missing boolean field \"ok\"");
  }
  if (!reply["ok"].get<bool>()) {
    const std::string why = reply.contains("error") && reply["error"].is_string()
                                ? reply["error"].get<std::string>()
                                : "no reason given";
    throw PluginError("plugin rejected fit: " + why);
  }
  ++fit_generation_;
}

double PluginProcess::predict_mean(int x, std::span<const double> z) {
  const std::uint64_t id = next_id_++;
  json msg = {{"id", id}, {"op", "predict_mean"}, {"x", x}, {"z", std::vector<double>(z.begin(), z.end())}};
  const json reply = parse_reply(run_request(msg.dump()), id);
  if (!reply.contains("y") || !reply["y"].is_number()) {
    throw ProtocolError("predict_mean reply missing numeric field \"y\"");
  }
  return reply["y"].get<double>();
}

std::vector<double> PluginProcess::predict_dist(int x, std::span<const double> z,
                                                std::size_t n_y, std::uint64_t seed) {
  const std::uint64_t id = next_id_++;
  json msg = {{"id", id},
              {"op", "predict_dist"},
              {"x", x},
              {"z", std::vector<double>(z.begin(), z.end())},
              {"n_y", n_y},
              {"seed", seed}};
  const json reply = parse_reply(run_request(msg.dump()), id);
  if (!reply.contains("samples") || !reply["samples"].is_array()) {
    throw ProtocolError("predict_dist reply missing array field \"samples\"");
  }
  std::vector<double> out;
  out.reserve(reply["samples"].size());
  for (const auto& v : reply["samples"]) {
    if (!v.is_number()) throw ProtocolError("predict_dist field \"samples\" must hold numbers");
    out.push_back(v.get<double>());
  }
  if (out.size() != n_y) {
    throw ProtocolError("predict_dist returned " + std::to_string(out.size()) +
                        " samples, expected " + std::to_string(n_y));
  }
  return out;
}

void PluginProcess::shutdown() {
  if (!io_ || io_->dead) return;
  const std::uint64_t id = next_id_++;
  json msg = {{"id", id}, {"op", "shutdown"}};
  try {
    parse_reply(run_request(msg.dump()), id);
  } catch (const Error&) {
    // best effort; fall through to reaping
  }
  if (io_->pid > 0) {
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(io_->pid, nullptr, WNOHANG) == io_->pid) {
        io_->pid = -1;
        break;
      }
      ::usleep(10000);
    }
  }
  io_->kill_child();
}

PluginHost::~PluginHost() { shutdown_all(); }

void PluginHost::shutdown_all() {
  for (auto& [k, p] : procs_) {
    (void)k;
    try {
      p->shutdown();
    } catch (...) {
    }
  }
  procs_.clear();
}

std::shared_ptr<PluginProcess> PluginHost::acquire(const ModelSpec& spec) {
  std::string key;
  for (const auto& a : spec.plugin_command) {
    key += a;
    key += '\0';
  }
  for (const auto& [k, v] : spec.plugin_env) {
    key += k;
    key += '=';
    key += v;
    key += '\0';
  }
  auto it = procs_.find(key);
  if (it != procs_.end()) return it->second;
  auto proc = std::make_shared<PluginProcess>(spec.plugin_command, spec.plugin_env,
                                              spec.plugin_timeout_s);
  procs_.emplace(std::move(key), proc);
  return proc;
}

namespace {

struct PluginPredictorImpl : Predictor::Impl {
  std::shared_ptr<PluginProcess> proc;
  std::uint64_t generation = 0;
  Capability caps = Capability::mean;

  void check_fresh() const {
    if (proc->fit_generation() != generation) {
      throw PluginError("stale plugin predictor: the process has been refit");
    }
  }
  double predict_mean(int x, std::span<const double> z) const override {
    check_fresh();
    return proc->predict_mean(x, z);
  }
  std::vector<double> predict_dist(int x, std::span<const double> z, std::size_t n_y,
                                   CounterRng& rng) const override {
    check_fresh();
    return proc->predict_dist(x, z, n_y, rng());
  }
  Capability capability() const override { return caps; }
};

}  // namespace

Predictor fit_plugin_model(const ModelSpec& spec, const Dataset& data, PluginHost* host) {
  std::shared_ptr<PluginProcess> proc;
  if (host != nullptr) {
    proc = host->acquire(spec);
  } else {
    proc = std::make_shared<PluginProcess>(spec.plugin_command, spec.plugin_env,
                                           spec.plugin_timeout_s);
  }
  const auto& caps = proc->handshake();
  proc->fit_data(data);

  auto impl = std::make_shared<PluginPredictorImpl>();
  impl->proc = proc;
  impl->generation = proc->fit_generation();
  const bool mean = std::find(caps.begin(), caps.end(), "mean") != caps.end();
  const bool dist = std::find(caps.begin(), caps.end(), "distributional") != caps.end();
  impl->caps = mean && dist ? Capability::both
                            : (dist ? Capability::distributional : Capability::mean);
  return Predictor(std::move(impl));
}

std::vector<TranscriptEntry> plugin_roundtrip(const ModelSpec& spec) {
  if (spec.plugin_command.empty()) throw ParamError("plugin-test requires a command");

  // Fixed fixture dataset: values chosen to serialize exactly.
  Dataset fixture;
  fixture.tag = Dataset::Tag::train;
  fixture.z = Matrix(8, 2);
  const double zs[8][2] = {{0.5, 1.25}, {1.5, 0.75},  {2.25, 1.0}, {0.25, 2.0},
                           {1.0, 0.5},  {2.0, 1.75}, {0.75, 2.25}, {1.75, 1.5}};
  fixture.x = {0, 1, 0, 1, 0, 1, 0, 1};
  fixture.y = {1.5, 3.25, 0.75, 2.5, 1.25, 3.0, 0.5, 2.75};
  for (int i = 0; i < 8; ++i) {
    fixture.z(i, 0) = zs[i][0];
    fixture.z(i, 1) = zs[i][1];
  }

  std::vector<TranscriptEntry> transcript;
  PluginProcess proc(spec.plugin_command, spec.plugin_env, spec.plugin_timeout_s);
  proc.record_transcript(&transcript);
  const auto& caps = proc.handshake();
  proc.fit_data(fixture);
  const std::vector<double> q = {1.0, 1.0};
  if (std::find(caps.begin(), caps.end(), "mean") != caps.end()) {
    proc.predict_mean(1, q);
  }
  if (std::find(caps.begin(), caps.end(), "distributional") != caps.end()) {
    proc.predict_dist(1, q, 3, 42);
  }
  proc.shutdown();
  return transcript;
}

}  // namespace frugal
