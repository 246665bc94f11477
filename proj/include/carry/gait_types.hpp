#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace carry {

enum class Foot { Left, Right };
enum class Phase { Stance, Swing };
enum class GaitEventKind { HeelStrike, ToeOff };

/// Joint classification of both legs, the input the torque distributor keys on.
enum class GaitState { DoubleStance, LeftStanceRightSwing, RightStanceLeftSwing, DoubleSwing };

struct GaitEvent {
  double t = 0.0;
  Foot foot = Foot::Left;
  GaitEventKind kind = GaitEventKind::HeelStrike;

  friend bool operator==(const GaitEvent&, const GaitEvent&) = default;
};

struct LegPhases {
  Phase left = Phase::Stance;
  Phase right = Phase::Stance;

  friend bool operator==(const LegPhases&, const LegPhases&) = default;
};

constexpr Foot other(Foot f) noexcept { return f == Foot::Left ? Foot::Right : Foot::Left; }

GaitState classify(Phase left, Phase right) noexcept;
inline GaitState classify(LegPhases p) noexcept { return classify(p.left, p.right); }

/// Phase a leg enters after `kind`.
constexpr Phase phase_after(GaitEventKind kind) noexcept {
  return kind == GaitEventKind::HeelStrike ? Phase::Stance : Phase::Swing;
}

std::string_view to_string(Foot f) noexcept;
std::string_view to_string(Phase p) noexcept;
std::string_view to_string(GaitEventKind k) noexcept;
std::string_view to_string(GaitState s) noexcept;

// Parsers accept exactly the to_string spellings and throw DataError otherwise.
Foot parse_foot(std::string_view s);
Phase parse_phase(std::string_view s);
GaitEventKind parse_event_kind(std::string_view s);
GaitState parse_gait_state(std::string_view s);

/// Per-sample leg phases reconstructed from an event list: sample k carries the
/// phase set by the latest event with t <= t0 + k / rate_hz, or `initial`
/// before any event. Events must be time-ordered per foot.
std::vector<LegPhases> phase_labels(std::span<const GaitEvent> events, LegPhases initial,
                                    std::size_t n, double rate_hz, double t0 = 0.0);

/// Events of one foot and kind, in input order.
std::vector<GaitEvent> select_events(std::span<const GaitEvent> events, Foot foot,
                                     std::optional<GaitEventKind> kind = std::nullopt);

/// True when each foot's events strictly alternate in kind and strictly
/// increase in time.
bool events_alternate(std::span<const GaitEvent> events);

}  // namespace carry
