#pragma once

// Running images on a back-end with timing, shared by the tool and tests.

#include <chrono>
#include <string>
#include <vector>

#include "issforge/image.hpp"
#include "issforge/runtime/run.hpp"

namespace issforge {

struct Outcome {
  rt::RunResult result;
  rt::CpuState state;
  double seconds = 0;

  double mips() const { return seconds > 0 ? static_cast<double>(result.executed) / seconds / 1e6 : 0; }
};

template <class Backend>
Outcome run_image(const Backend& be, const Image& image, rt::RunOptions opt) {
  opt.abort_vector = be.abort_vector();
  Outcome o{{}, make_state(image), 0};
  const auto t0 = std::chrono::steady_clock::now();
  o.result = rt::run(be, o.state, opt);
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return o;
}

// Fastest of `repeats` runs.
template <class Backend>
Outcome best_of(const Backend& be, const Image& image, const rt::RunOptions& opt, int repeats) {
  Outcome best = run_image(be, image, opt);
  for (int i = 1; i < repeats; ++i) {
    Outcome o = run_image(be, image, opt);
    if (o.seconds < best.seconds) best = std::move(o);
  }
  return best;
}

inline bool same_outcome(const Outcome& a, const Outcome& b) {
  return a.state == b.state && a.result.reason == b.result.reason && a.result.executed == b.result.executed &&
         a.result.data_aborts == b.result.data_aborts;
}

}  // namespace issforge
