/* Copyright 2026 The drivemt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "drivemt/models.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <deque>
#include <numeric>
#include <random>

#include "drivemt/error.hpp"
#include "drivemt/image_io.hpp"
#include "drivemt/nn.hpp"
#include "text_util.hpp"

namespace drivemt {

namespace {

class ConstantModel : public SteeringModel {
 public:
  explicit ConstantModel(double degrees) : degrees_(degrees) {}
  std::string id() const override { return "constant:" + detail::format_double(degrees_); }
  double predict(const FrameRecord&) override { return degrees_; }

 private:
  double degrees_;
};

class BrightnessModel : public SteeringModel {
 public:
  explicit BrightnessModel(double gain) : gain_(gain) {}
  std::string id() const override { return "brightness:" + detail::format_double(gain_); }
  double predict(const FrameRecord& frame) override {
    return gain_ * (mean_value(frame.image) - 0.5);
  }

 private:
  double gain_;
};

}  // namespace

std::unique_ptr<SteeringModel> constant_model(double degrees) {
  if (!std::isfinite(degrees)) throw ConfigError("constant model angle must be finite");
  return std::make_unique<ConstantModel>(degrees);
}

std::unique_ptr<SteeringModel> brightness_model(double gain) {
  if (!std::isfinite(gain)) throw ConfigError("brightness model gain must be finite");
  return std::make_unique<BrightnessModel>(gain);
}

// ---------------------------------------------------------------------------
// Toy convolutional regressor.

namespace {

nn::Stack cnn_stack(int h, int w) {
  using namespace nn;
  const int fh = (h / 2) / 2, fw = (w / 2) / 2;
  return {conv(3, 8, 4, 2, 1), leaky_relu(), conv(8, 16, 4, 2, 1), leaky_relu(),
          dense(16 * fh * fw, 1)};
}

class ToyCnnModel : public SteeringModel {
 public:
  ToyCnnModel(nn::Stack net, int h, int w, double mean, double scale, std::uint64_t seed)
      : net_(std::move(net)), h_(h), w_(w), mean_(mean), scale_(scale), seed_(seed) {}
  std::string id() const override { return "cnn:" + std::to_string(seed_); }
  double predict(const FrameRecord& frame) override {
    if (frame.image.channels() != 3) throw DimensionError("toy CNN expects 3-channel frames");
    const auto x = nn::to_tensor(resize_bilinear(frame.image, h_, w_));
    return mean_ + scale_ * nn::forward(net_, x).data[0];
  }

 private:
  nn::Stack net_;
  int h_, w_;
  double mean_, scale_;
  std::uint64_t seed_;
};

}  // namespace

ToyCnnTraining train_toy_cnn(std::span<const FrameRecord> frames, const ToyCnnConfig& config) {
  if (frames.empty()) throw EmptyInputError("toy CNN training set is empty");
  if (config.epochs < 0 || config.batch_size <= 0 || !(config.learning_rate >= 0.0) ||
      config.input_height < 4 || config.input_width < 4 || config.input_height % 4 != 0 ||
      config.input_width % 4 != 0) {
    throw ConfigError("invalid toy CNN configuration");
  }
  std::vector<nn::Tensor> inputs;
  std::vector<double> labels;
  for (const auto& f : frames) {
    if (!f.steering_degrees) {
      throw DataError("frame " + f.frame_id + " has no steering label; the toy CNN needs labels");
    }
    if (f.image.channels() != 3) throw DimensionError("frame " + f.frame_id + " is not RGB");
    inputs.push_back(nn::to_tensor(resize_bilinear(f.image, config.input_height, config.input_width)));
    labels.push_back(*f.steering_degrees);
  }
  const double n = static_cast<double>(labels.size());
  const double mean = std::accumulate(labels.begin(), labels.end(), 0.0) / n;
  double var = 0.0;
  for (double y : labels) var += (y - mean) * (y - mean);
  const double scale = var > 0.0 ? std::sqrt(var / n) : 1.0;
  std::vector<double> targets;
  for (double y : labels) targets.push_back((y - mean) / scale);

  std::mt19937_64 rng(config.seed);
  nn::Stack net = cnn_stack(config.input_height, config.input_width);
  nn::initialize(net, rng);
  nn::Adam adam(0.9, 0.999);

  ToyCnnTraining result;
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double bn = static_cast<double>(stop - start);
      nn::Stack grads = nn::zeros_like(net);
      for (std::size_t k = start; k < stop; ++k) {
        nn::Trace trace;
        const double out = nn::forward(net, inputs[order[k]], &trace).data[0];
        const double r = out - targets[order[k]];
        epoch_loss += r * r;
        nn::backward(net, trace, nn::Tensor(1, 1, 1, 2.0 * r / bn), &grads);
      }
      const auto pv = nn::parameter_views(net);
      const auto gv = nn::parameter_views(std::as_const(grads));
      adam.step(pv, gv, config.learning_rate);
    }
    result.epoch_losses.push_back(epoch_loss / n);
  }
  result.model = std::make_unique<ToyCnnModel>(std::move(net), config.input_height,
                                               config.input_width, mean, scale, config.seed);
  return result;
}

ToyCnnTraining train_toy_cnn(const DatasetManifest& manifest, const ToyCnnConfig& config) {
  const auto frames = load_stream(manifest);
  return train_toy_cnn(frames, config);
}

std::unique_ptr<SteeringModel> toy_cnn_model(const DatasetManifest& manifest,
                                             const ToyCnnConfig& config) {
  return train_toy_cnn(manifest, config).model;
}

// ---------------------------------------------------------------------------
// Windowed wrapper.

double mean_aggregator(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

namespace {

class WindowedModel : public SteeringModel {
 public:
  WindowedModel(std::unique_ptr<SteeringModel> inner, int window, WindowAggregator aggregate)
      : inner_(std::move(inner)), window_(window), aggregate_(std::move(aggregate)) {}

  std::string id() const override {
    return "windowed:" + std::to_string(window_) + ":" + inner_->id();
  }
  int window_size() const override { return window_; }

  double predict(const FrameRecord& frame) override {
    const double p = inner_->predict(frame);
    if (history_.empty()) history_.assign(static_cast<std::size_t>(window_), p);
    else {
      history_.pop_front();
      history_.push_back(p);
    }
    buffer_.assign(history_.begin(), history_.end());
    return aggregate_(buffer_);
  }

  void reset() override {
    inner_->reset();
    history_.clear();
  }

 private:
  std::unique_ptr<SteeringModel> inner_;
  int window_;
  WindowAggregator aggregate_;
  std::deque<double> history_;
  std::vector<double> buffer_;
};

}  // namespace

std::unique_ptr<SteeringModel> windowed_model(std::unique_ptr<SteeringModel> inner, int window,
                                              WindowAggregator aggregator) {
  if (!inner) throw ConfigError("windowed model needs an inner model");
  if (window < 1) throw ConfigError("window size must be at least 1");
  if (!aggregator) throw ConfigError("windowed model needs an aggregator");
  return std::make_unique<WindowedModel>(std::move(inner), window, std::move(aggregator));
}

// ---------------------------------------------------------------------------
// External process bridge.

namespace {

std::atomic<std::uint64_t> temp_counter{0};

class ExternalModel : public SteeringModel {
 public:
  explicit ExternalModel(ExternalModelOptions options) : options_(std::move(options)) {
    if (options_.command.empty()) throw ConfigError("external model command is empty");
    if (options_.model_id.empty()) options_.model_id = "external";
    start();
  }

  ~ExternalModel() override {
    stop();
    if (!temp_dir_.empty()) {
      std::error_code ec;
      std::filesystem::remove_all(temp_dir_, ec);
    }
  }

  std::string id() const override { return options_.model_id; }

  double predict(const FrameRecord& frame) override {
    std::filesystem::path path = frame.source_path;
    if (path.empty()) path = spill(frame);
    const std::string request = "PREDICT " + std::filesystem::absolute(path).string();
    const std::string line = exchange(request);
    const auto value = detail::parse_double(detail::trim(line));
    if (!value) throw ProtocolError(describe("malformed response line '" + line + "' to " + request));
    if (!std::isfinite(*value)) {
      throw ProtocolError(describe("non-finite angle in response line '" + line + "'"));
    }
    return *value;
  }

  void reset() override {
    if (pid_ <= 0) start();
    const std::string line = exchange("RESET");
    if (detail::trim(line) != "OK") {
      throw ProtocolError(describe("expected 'OK' after RESET, got '" + line + "'"));
    }
  }

 private:
  void start() {
    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0 || pipe(err_pipe) != 0) {
      throw ModelError("cannot create pipes for external model: " + std::string(std::strerror(errno)));
    }
    signal(SIGPIPE, SIG_IGN);
    const pid_t pid = fork();
    if (pid < 0) throw ModelError("fork failed: " + std::string(std::strerror(errno)));
    if (pid == 0) {
      dup2(in_pipe[0], STDIN_FILENO);
      dup2(out_pipe[1], STDOUT_FILENO);
      dup2(err_pipe[1], STDERR_FILENO);
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) {
        close(fd);
      }
      execl("/bin/sh", "sh", "-c", options_.command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    child_err_ = err_pipe[0];
    fcntl(child_err_, F_SETFL, fcntl(child_err_, F_GETFL) | O_NONBLOCK);
    fcntl(to_child_, F_SETFD, FD_CLOEXEC);
    fcntl(from_child_, F_SETFD, FD_CLOEXEC);
    fcntl(child_err_, F_SETFD, FD_CLOEXEC);
    pending_.clear();
  }

  void stop() {
    if (pid_ <= 0) return;
    for (int* fd : {&to_child_, &from_child_, &child_err_}) {
      if (*fd >= 0) close(*fd);
      *fd = -1;
    }
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == 0) {
      kill(pid_, SIGTERM);
      waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }

  std::filesystem::path spill(const FrameRecord& frame) {
    if (temp_dir_.empty()) {
      temp_dir_ = std::filesystem::temp_directory_path() /
                  ("drivemt-ext-" + std::to_string(getpid()) + "-" +
                   std::to_string(temp_counter.fetch_add(1)));
      std::filesystem::create_directories(temp_dir_);
    }
    const auto path = temp_dir_ / "frame.png";
    write_png(path, frame.image);
    return path;
  }

  void drain_stderr() {
    char buf[4096];
    while (child_err_ >= 0) {
      const ssize_t n = read(child_err_, buf, sizeof buf);
      if (n <= 0) break;
      stderr_.append(buf, static_cast<std::size_t>(n));
      if (stderr_.size() > 8192) stderr_.erase(0, stderr_.size() - 8192);
    }
  }

  std::string describe(const std::string& what) {
    drain_stderr();
    std::string msg = "external model '" + options_.model_id + "': " + what;
    if (!stderr_.empty()) msg += "\nchild stderr:\n" + stderr_;
    return msg;
  }

  [[noreturn]] void fail(const std::string& what) {
    const std::string msg = describe(what);
    stop();
    throw ModelError(msg);
  }

  std::string exchange(const std::string& request) {
    if (pid_ <= 0) start();
    const std::string out = request + "\n";
    std::size_t sent = 0;
    while (sent < out.size()) {
      const ssize_t n = write(to_child_, out.data() + sent, out.size() - sent);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail("cannot write request (" + std::string(std::strerror(errno)) + ")");
      }
      sent += static_cast<std::size_t>(n);
    }
    return read_line();
  }

  std::string read_line() {
    const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
    while (true) {
      const auto nl = pending_.find('\n');
      if (nl != std::string::npos) {
        std::string line = pending_.substr(0, nl);
        pending_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) fail("no response within " + std::to_string(options_.timeout.count()) + " ms");
      pollfd fds[2] = {{from_child_, POLLIN, 0}, {child_err_, POLLIN, 0}};
      const int r = poll(fds, 2, static_cast<int>(left.count()));
      if (r < 0) {
        if (errno == EINTR) continue;
        fail("poll failed");
      }
      if (fds[1].revents & POLLIN) drain_stderr();
      if (fds[0].revents & (POLLIN | POLLHUP)) {
        char buf[4096];
        const ssize_t n = read(from_child_, buf, sizeof buf);
        if (n == 0) fail("process closed its output");
        if (n < 0 && errno != EINTR && errno != EAGAIN) fail("read failed");
        if (n > 0) pending_.append(buf, static_cast<std::size_t>(n));
      }
    }
  }

  ExternalModelOptions options_;
  pid_t pid_ = -1;
  int to_child_ = -1, from_child_ = -1, child_err_ = -1;
  std::string pending_;
  std::string stderr_;
  std::filesystem::path temp_dir_;
};

}  // namespace

std::unique_ptr<SteeringModel> external_model(const ExternalModelOptions& options) {
  return std::make_unique<ExternalModel>(options);
}

}  // namespace drivemt
