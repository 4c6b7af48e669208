// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <memory>

namespace lbb {

// Time source for solve metrics. The engine notifies the clock after every
// LP solve so a deterministic clock can advance in fixed ticks, which keeps
// time-based outputs reproducible in tests.
class solve_clock {
 public:
  virtual ~solve_clock() = default;
  virtual double now() = 0;  // seconds, monotonic
  virtual void on_lp_solved() {}
  virtual const char* kind() const = 0;
};

class real_clock final : public solve_clock {
 public:
  double now() override {
    const auto t = std::chrono::steady_clock::now().time_since_epoch();
    return std::chrono::duration<double>(t).count();
  }
  const char* kind() const override { return "real"; }
};

// Advances a fixed tick per LP solve; now() is a pure function of the number
// of LPs solved so far.
class fake_clock final : public solve_clock {
 public:
  explicit fake_clock(double tick_s = 1e-3) : tick_(tick_s) {}
  double now() override { return t_; }
  void on_lp_solved() override { t_ += tick_; }
  const char* kind() const override { return "fake"; }

 private:
  double tick_;
  double t_ = 0.0;
};

}  // namespace lbb
