#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

namespace subrl {

using StateId = std::int32_t;
using ActionId = std::int32_t;

/// A time-augmented state s = (h, v).
struct TimedState {
  int h = 0;
  StateId v = 0;

  auto operator<=>(const TimedState&) const = default;
};

/// The observable prefix s_0..s_h of a trajectory, as seen by a policy at step h.
struct HistoryView {
  std::span<const StateId> states;
  int horizon = 0;

  int time() const noexcept { return static_cast<int>(states.size()) - 1; }
  StateId current() const noexcept { return states.back(); }
};

}  // namespace subrl
