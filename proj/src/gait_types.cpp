#include "carry/gait_types.hpp"

#include <algorithm>
#include <array>

#include "carry/errors.hpp"

namespace carry {

namespace {

// Event and sample times both pass through 6-decimal CSV text; anything closer
// than this counts as simultaneous.
constexpr double kTimeSlack = 1e-7;

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<Enum, N>& values, const char* what) {
  for (Enum v : values) {
    if (to_string(v) == s) return v;
  }
  throw DataError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace

GaitState classify(Phase left, Phase right) noexcept {
  if (left == Phase::Stance) {
    return right == Phase::Stance ? GaitState::DoubleStance : GaitState::LeftStanceRightSwing;
  }
  return right == Phase::Stance ? GaitState::RightStanceLeftSwing : GaitState::DoubleSwing;
}

std::string_view to_string(Foot f) noexcept { return f == Foot::Left ? "left" : "right"; }

std::string_view to_string(Phase p) noexcept { return p == Phase::Stance ? "stance" : "swing"; }

std::string_view to_string(GaitEventKind k) noexcept {
  return k == GaitEventKind::HeelStrike ? "heel_strike" : "toe_off";
}

std::string_view to_string(GaitState s) noexcept {
  switch (s) {
    case GaitState::DoubleStance: return "double_stance";
    case GaitState::LeftStanceRightSwing: return "left_stance_right_swing";
    case GaitState::RightStanceLeftSwing: return "right_stance_left_swing";
    case GaitState::DoubleSwing: return "double_swing";
  }
  return "double_swing";
}

Foot parse_foot(std::string_view s) {
  return parse_enum(s, std::array{Foot::Left, Foot::Right}, "foot");
}

Phase parse_phase(std::string_view s) {
  return parse_enum(s, std::array{Phase::Stance, Phase::Swing}, "phase");
}

GaitEventKind parse_event_kind(std::string_view s) {
  return parse_enum(s, std::array{GaitEventKind::HeelStrike, GaitEventKind::ToeOff}, "event kind");
}

GaitState parse_gait_state(std::string_view s) {
  return parse_enum(s,
                    std::array{GaitState::DoubleStance, GaitState::LeftStanceRightSwing,
                               GaitState::RightStanceLeftSwing, GaitState::DoubleSwing},
                    "gait state");
}

std::vector<LegPhases> phase_labels(std::span<const GaitEvent> events, LegPhases initial,
                                    std::size_t n, double rate_hz, double t0) {
  std::vector<GaitEvent> ordered(events.begin(), events.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const GaitEvent& a, const GaitEvent& b) { return a.t < b.t; });

  std::vector<LegPhases> out(n);
  LegPhases current = initial;
  std::size_t next = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) / rate_hz;
    while (next < ordered.size() && ordered[next].t <= t + kTimeSlack) {
      const auto& e = ordered[next++];
      (e.foot == Foot::Left ? current.left : current.right) = phase_after(e.kind);
    }
    out[k] = current;
  }
  return out;
}

std::vector<GaitEvent> select_events(std::span<const GaitEvent> events, Foot foot,
                                     std::optional<GaitEventKind> kind) {
  std::vector<GaitEvent> out;
  for (const auto& e : events) {
    if (e.foot == foot && (!kind || e.kind == *kind)) out.push_back(e);
  }
  return out;
}

bool events_alternate(std::span<const GaitEvent> events) {
  for (Foot foot : {Foot::Left, Foot::Right}) {
    const auto mine = select_events(events, foot);
    for (std::size_t i = 1; i < mine.size(); ++i) {
      if (mine[i].kind == mine[i - 1].kind || !(mine[i].t > mine[i - 1].t)) return false;
    }
  }
  return true;
}

}  // namespace carry
