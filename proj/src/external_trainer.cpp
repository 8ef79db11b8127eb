#include "skillmix/external_trainer.hpp"

#include <json.hpp>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <stdexcept>

namespace skillmix {

using nlohmann::json;

ExternalTrainer::ExternalTrainer(std::vector<std::string> command,
                                 std::vector<std::string> train_names,
                                 std::vector<std::string> eval_names, long timeout_ms)
    : command_(std::move(command)), train_names_(std::move(train_names)),
      eval_names_(std::move(eval_names)), timeout_ms_(timeout_ms) {
  if (command_.empty()) throw std::invalid_argument("external trainer: empty command");
  if (train_names_.empty() || eval_names_.empty()) {
    throw std::invalid_argument("external trainer: skill names required");
  }
  spawn();
}

ExternalTrainer::~ExternalTrainer() { shutdown(); }

void ExternalTrainer::spawn() {
  // A write to a dead child must surface as EPIPE, not kill the process.
  static const bool sigpipe_ignored = [] {
    signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)sigpipe_ignored;

  int to_pipe[2];
  int from_pipe[2];
  if (pipe(to_pipe) != 0 || pipe(from_pipe) != 0) {
    throw std::runtime_error("external trainer: pipe failed");
  }
  const pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("external trainer: fork failed");
  if (pid == 0) {
    dup2(to_pipe[0], STDIN_FILENO);
    dup2(from_pipe[1], STDOUT_FILENO);
    close(to_pipe[0]);
    close(to_pipe[1]);
    close(from_pipe[0]);
    close(from_pipe[1]);
    std::vector<char*> argv;
    for (auto& a : command_) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execvp(argv[0], argv.data());
    _exit(127);
  }
  close(to_pipe[0]);
  close(from_pipe[1]);
  child_pid_ = pid;
  to_child_ = to_pipe[1];
  from_child_ = from_pipe[0];
  fcntl(from_child_, F_SETFL, O_NONBLOCK);
  read_buffer_.clear();
  observed_ready_ = false;
  round_ = 0;
}

void ExternalTrainer::shutdown() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (child_pid_ > 0) {
    kill(child_pid_, SIGTERM);
    int status = 0;
    for (int i = 0; i < 50 && waitpid(child_pid_, &status, WNOHANG) == 0; ++i) {
      usleep(10 * 1000);
    }
    kill(child_pid_, SIGKILL);
    waitpid(child_pid_, &status, WNOHANG);
    child_pid_ = -1;
  }
}

void ExternalTrainer::reset() {
  shutdown();
  spawn();
}

std::string ExternalTrainer::read_line_with_deadline() {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms_);
  for (;;) {
    const auto nl = read_buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      return line;
    }
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) throw std::runtime_error("external trainer: response timeout");
    pollfd pfd{from_child_, POLLIN, 0};
    const int remaining = static_cast<int>(
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count());
    const int rc = poll(&pfd, 1, std::max(1, remaining));
    if (rc < 0) throw std::runtime_error("external trainer: poll failed");
    if (rc == 0) continue;
    char chunk[4096];
    const ssize_t got = read(from_child_, chunk, sizeof(chunk));
    if (got == 0) throw std::runtime_error("external trainer: process closed its output");
    if (got < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK) continue;
      throw std::runtime_error("external trainer: read failed");
    }
    read_buffer_.append(chunk, static_cast<std::size_t>(got));
  }
}

VectorXd ExternalTrainer::exchange(int round, const VectorXi& counts) {
  json alloc = json::object();
  for (std::size_t i = 0; i < train_names_.size(); ++i) {
    if (counts.size() > 0) alloc[train_names_[i]] = counts(static_cast<Eigen::Index>(i));
  }
  json request;
  request["round"] = round;
  request["allocation"] = alloc;
  const std::string line = request.dump() + "\n";

  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = write(to_child_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("external trainer: write failed (process gone?)");
    }
    written += static_cast<std::size_t>(n);
  }

  json response;
  try {
    response = json::parse(read_line_with_deadline());
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("external trainer: malformed response: ") + e.what());
  }
  if (!response.contains("round") || response["round"].get<int>() != round ||
      !response.contains("losses")) {
    throw std::runtime_error("external trainer: response does not match request round");
  }
  VectorXd losses(eval_names_.size());
  for (std::size_t j = 0; j < eval_names_.size(); ++j) {
    if (!response["losses"].contains(eval_names_[j])) {
      throw std::runtime_error("external trainer: missing loss for " + eval_names_[j]);
    }
    losses(static_cast<Eigen::Index>(j)) = response["losses"][eval_names_[j]].get<double>();
  }
  return losses;
}

LossState ExternalTrainer::observe() {
  if (!observed_ready_) {
    observed_ = exchange(0, VectorXi::Zero(static_cast<Eigen::Index>(train_names_.size())));
    observed_ready_ = true;
  }
  return {observed_, round_};
}

void ExternalTrainer::step(const BatchAlloc& batch) {
  VectorXi counts = batch.counts;
  if (counts.size() != static_cast<Eigen::Index>(train_names_.size())) {
    throw std::invalid_argument("external trainer: allocation does not match train skills");
  }
  observe();  // make sure the round-0 probe happened before the first step
  ++round_;
  observed_ = exchange(round_, counts);
  observed_ready_ = true;
}

std::unique_ptr<TrainerSnapshot> ExternalTrainer::snapshot() const {
  throw std::logic_error("external trainer does not support snapshots");
}

void ExternalTrainer::restore(const TrainerSnapshot&) {
  throw std::logic_error("external trainer does not support snapshots");
}

}  // namespace skillmix
