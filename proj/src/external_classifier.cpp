#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>

#include "cms/classifier.hpp"
#include "cms/errors.hpp"

extern char** environ;

namespace cms {

namespace {

constexpr char kRequestMagic[8] = {'C', 'M', 'S', 'C', 'L', 'S', '0', '1'};
constexpr double kProbSumTolerance = 1e-4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void write_all(int fd, const std::uint8_t* data, std::size_t size) {
  while (size > 0) {
    const ssize_t w = ::write(fd, data, size);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw ClassifierIoError(std::string("external classifier: write failed: ") + std::strerror(errno));
    }
    data += w;
    size -= static_cast<std::size_t>(w);
  }
}

void read_exact(int fd, std::uint8_t* data, std::size_t size) {
  while (size > 0) {
    const ssize_t r = ::read(fd, data, size);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw ClassifierIoError(std::string("external classifier: read failed: ") + std::strerror(errno));
    }
    if (r == 0) throw ClassifierIoError("external classifier: process exited mid-response");
    data += r;
    size -= static_cast<std::size_t>(r);
  }
}

}  // namespace

std::vector<std::uint8_t> encode_classifier_request(const ProjectedImage& image) {
  std::vector<std::uint8_t> out(kRequestMagic, kRequestMagic + 8);
  out.reserve(20 + image.pixels.size() * 4);
  put_u32(out, image.height());
  put_u32(out, image.width());
  put_u32(out, image.channels);
  for (float f : image.pixels) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
  return out;
}

LabelDistribution decode_classifier_response(std::span<const std::uint8_t> bytes, std::size_t expected_classes) {
  if (bytes.size() < 4) throw ClassifierIoError("external classifier: short response");
  const std::uint32_t count = get_u32(bytes.data());
  if (count != expected_classes)
    throw ClassifierIoError("external classifier: expected " + std::to_string(expected_classes) + " classes, got " +
                            std::to_string(count));
  if (bytes.size() != 4 + static_cast<std::size_t>(count) * 4)
    throw ClassifierIoError("external classifier: response length does not match class count");
  LabelDistribution d;
  d.probs.resize(count);
  double total = 0.0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t bits = get_u32(bytes.data() + 4 + 4 * i);
    float f;
    std::memcpy(&f, &bits, 4);
    if (!std::isfinite(f) || f < 0.0f || f > 1.0f)
      throw ClassifierIoError("external classifier: probability out of [0, 1]");
    d.probs[i] = f;
    total += f;
  }
  if (std::abs(total - 1.0) > kProbSumTolerance)
    throw ClassifierIoError("external classifier: probabilities sum to " + std::to_string(total));
  return d;
}

ExternalClassifier::ExternalClassifier(std::string command, std::size_t class_count)
    : command_(std::move(command)), class_count_(class_count) {
  if (command_.empty()) throw InvalidArgument("external classifier: empty command");
  if (class_count_ == 0) throw InvalidArgument("external classifier: class count must be >= 1");
  // A dead child must surface as EPIPE on write, not kill the process.
  static std::once_flag sigpipe_once;
  std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });
  start();
}

ExternalClassifier::~ExternalClassifier() { stop(); }

void ExternalClassifier::start() {
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw ClassifierIoError("external classifier: pipe failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw ClassifierIoError("external classifier: pipe failed");
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  std::string sh = "sh";
  std::string flag = "-c";
  char* argv[] = {sh.data(), flag.data(), command_.data(), nullptr};
  pid_t pid = -1;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw ClassifierIoError("external classifier: cannot spawn '" + command_ + "': " + std::strerror(rc));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

void ExternalClassifier::stop() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    pid_ = -1;
  }
}

LabelDistribution ExternalClassifier::probabilities(const ProjectedImage& image) {
  if (to_child_ < 0) throw ClassifierIoError("external classifier: connection closed");
  const auto request = encode_classifier_request(image);
  try {
    write_all(to_child_, request.data(), request.size());
    buffer_.resize(4);
    read_exact(from_child_, buffer_.data(), 4);
    const std::uint32_t count = get_u32(buffer_.data());
    if (count != class_count_)
      throw ClassifierIoError("external classifier: expected " + std::to_string(class_count_) + " classes, got " +
                              std::to_string(count));
    buffer_.resize(4 + static_cast<std::size_t>(count) * 4);
    read_exact(from_child_, buffer_.data() + 4, buffer_.size() - 4);
  } catch (const ClassifierIoError&) {
    // The stream is out of sync after any failure; never reuse it.
    stop();
    throw;
  }
  return decode_classifier_response(buffer_, class_count_);
}

std::unique_ptr<Classifier> ExternalClassifier::clone() const {
  return std::make_unique<ExternalClassifier>(command_, class_count_);
}

}  // namespace cms
