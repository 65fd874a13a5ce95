// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mimoloc/fxp.hpp"
#include "mimoloc/types.hpp"

namespace mimoloc::nn {

/// Index of the largest logit; ties resolve to the lowest index.
Scenario argmax_label(std::span<const double> logits);
Scenario argmax_label(std::span<const fxp::AccVal> logits);

/// Sliding-window majority vote over the per-snapshot router labels.
///
/// The window starts filled with the initial selection. After each push the
/// label with the highest count in the window becomes the selection; if the
/// highest count is shared, the previous selection is kept. One state per
/// stream; not thread safe.
class RouterState {
 public:
  explicit RouterState(std::size_t window = 15, Scenario initial = Scenario::S1);

  Scenario push(Scenario label);
  Scenario current() const noexcept { return current_; }
  std::size_t window() const noexcept { return labels_.size(); }
  /// Window contents, oldest first.
  std::vector<Scenario> labels() const;

 private:
  std::vector<Scenario> labels_;  // ring buffer
  std::size_t head_ = 0;          // slot of the oldest entry
  Scenario current_;
};

template <typename T>
Scenario route(RouterState& state, std::span<const T> logits) {
  return state.push(argmax_label(logits));
}

}  // namespace mimoloc::nn
