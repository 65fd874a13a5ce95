// SPDX-License-Identifier: Apache-2.0
#include "mimoloc/nn/router.hpp"

#include <array>

#include "mimoloc/errors.hpp"

namespace mimoloc::nn {

namespace {

template <typename T, typename Less>
Scenario argmax_impl(std::span<const T> logits, Less less) {
  expects(logits.size() == 3, "router: expected three logits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (less(logits[best], logits[i])) best = i;
  return static_cast<Scenario>(best);
}

}  // namespace

Scenario argmax_label(std::span<const double> logits) {
  return argmax_impl(logits, [](double a, double b) { return a < b; });
}

Scenario argmax_label(std::span<const fxp::AccVal> logits) {
  return argmax_impl(logits, [](fxp::AccVal a, fxp::AccVal b) { return a.code < b.code; });
}

RouterState::RouterState(std::size_t window, Scenario initial)
    : labels_(window, initial), current_(initial) {
  if (window == 0) throw ConfigError("router: window length must be >= 1");
}

Scenario RouterState::push(Scenario label) {
  labels_[head_] = label;
  head_ = (head_ + 1) % labels_.size();

  std::array<std::size_t, 3> counts{};
  for (Scenario s : labels_) ++counts[index_of(s)];
  std::size_t best = 0;
  bool shared = false;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[best]) {
      best = i;
      shared = false;
    } else if (counts[i] == counts[best]) {
      shared = true;
    }
  }
  if (!shared) current_ = static_cast<Scenario>(best);
  return current_;
}

std::vector<Scenario> RouterState::labels() const {
  std::vector<Scenario> out;
  out.reserve(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i)
    out.push_back(labels_[(head_ + i) % labels_.size()]);
  return out;
}

}  // namespace mimoloc::nn
