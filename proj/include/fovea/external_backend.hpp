#pragma once

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fovea/detector.hpp"
#include "fovea/io.hpp"

namespace fovea {

namespace detail {

/// Runs `/bin/sh -c command`, feeding `input` on stdin and returning the
/// child's full stdout. Throws BackendError on spawn failure or nonzero
/// exit status.
inline std::string run_subprocess(const std::string& command,
                                  const std::string& input) {
  int in_pipe[2];   // parent writes -> child stdin
  int out_pipe[2];  // child stdout -> parent reads
  if (pipe(in_pipe) != 0) throw BackendError("pipe() failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw BackendError("pipe() failed");
  }

  const pid_t pid = fork();
  if (pid < 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    throw BackendError("fork() failed");
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }

  close(in_pipe[0]);
  close(out_pipe[1]);

  // Writing a closed child can raise SIGPIPE; ignore it for the write.
  struct sigaction ignore_pipe {};
  struct sigaction old_pipe {};
  ignore_pipe.sa_handler = SIG_IGN;
  sigaction(SIGPIPE, &ignore_pipe, &old_pipe);

  std::size_t written = 0;
  bool write_failed = false;
  while (written < input.size()) {
    const ssize_t n = write(in_pipe[1], input.data() + written,
                            input.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      write_failed = true;
      break;
    }
    written += static_cast<std::size_t>(n);
  }
  close(in_pipe[1]);

  std::string output;
  char buf[4096];
  while (true) {
    const ssize_t n = read(out_pipe[0], buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (n == 0) break;
    output.append(buf, static_cast<std::size_t>(n));
  }
  close(out_pipe[0]);
  sigaction(SIGPIPE, &old_pipe, nullptr);

  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw BackendError("detector command failed: " + command);
  if (write_failed && output.empty())
    throw BackendError("detector command closed its input: " + command);
  return output;
}

}  // namespace detail

/// Runs an external detector command once per region. The request is one
/// JSON object on the child's stdin: {frame_id, source, region: {u, v, w,
/// h}, input_side, image}; the expected reply is a JSON array of {class,
/// score, x, y, w, h} in region-local coordinates on stdout.
class ExternalBackend : public DetectorBackend {
 public:
  explicit ExternalBackend(std::string command)
      : command_(std::move(command)) {
    if (command_.empty()) throw BackendError("external command is empty");
  }

  std::vector<Detection> detect(const DetectorInput& input) const override {
    if (input.frame == nullptr) throw BackendError("detector input has no frame");
    nlohmann::json req;
    req["frame_id"] = input.frame->frame_id;
    req["source"] = input.region.j;
    req["region"] = {{"u", input.region.u},
                     {"v", input.region.v},
                     {"w", input.region.w},
                     {"h", input.region.h}};
    req["input_side"] = input.input_side;
    req["image"] = input.frame->image;

    const std::string reply =
        detail::run_subprocess(command_, req.dump() + "\n");
    nlohmann::json j = nlohmann::json::parse(reply, nullptr, false);
    if (j.is_discarded() || !j.is_array())
      throw BackendError("external detector did not return a JSON array");

    std::vector<Detection> out;
    for (const nlohmann::json& d : j) {
      Detection det = detail::detection_from_json(d, false);
      det.source = input.region.j;
      out.push_back(std::move(det));
    }
    return out;
  }

  /// One subprocess at a time: calls are serialized by the pipeline.
  bool concurrency_safe() const override { return false; }
  std::string name() const override { return "external"; }

 private:
  std::string command_;
};

}  // namespace fovea
