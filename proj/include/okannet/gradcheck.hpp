#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "okannet/layers.hpp"
#include "okannet/tensor.hpp"

namespace okannet {

// Central finite differences with h = 1e-5 in double precision.
// Error metric per element: |analytic - numeric| divided by
// max(|analytic| + |numeric|, 1e-6); a check passes when the maximum over
// all elements stays below 1e-4.
struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;

  bool all_pass() const {
    for (const auto& e : entries)
      if (!e.pass) return false;
    return true;
  }
};

// Checks one layer's input and parameter gradients against finite
// differences of the scalar objective sum(forward(x) * direction), with a
// fixed random direction. `make_rng` recreates the identical stream for
// every forward so stochastic layers keep their mask fixed.
double gradcheck_layer(Layer<double>& layer, const TensorT<double>& input,
                       Mode mode, uint64_t seed,
                       const GradCheckOptions& opts = {});

// Runs every layer kind plus a residual block and a small composed
// network (three conv/bn/relu/pool stages into the dense head, checked
// through the cross-entropy loss) across `seeds` different seeds.
GradCheckReport gradcheck_suite(uint64_t base_seed, int seeds = 10,
                                const GradCheckOptions& opts = {});

}  // namespace okannet
