#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "carry/gait_types.hpp"
#include "carry/simgait.hpp"

namespace carry {

// On-disk layout of a trial (see docs/formats.md):
//
//   manifest.txt        key = value lines
//   omega.csv           t_s,omega_left,omega_right                 control rate
//   insole_left.csv     t_s,insole_left_f0..insole_left_f7         control rate
//   insole_right.csv    t_s,insole_right_f0..insole_right_f7       control rate
//   kinematics.csv      t_s,body_x,left_x,...,knee_right_deg       control rate
//   emg.csv             t_s,emg_forearm                            EMG rate
//   truth_labels.csv    t_s,left_phase,right_phase,gait_state      (optional)
//   truth_events.csv    t_s,foot,kind                              (optional)

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws DataError when absent.
  std::size_t column(std::string_view name) const;
};

/// Ordered key = value pairs.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

CsvTable read_csv(const std::filesystem::path& path);
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(const std::filesystem::path& path, const KeyValues& kv);
/// Throws DataError when the key is missing.
const std::string& lookup(const KeyValues& kv, std::string_view key);
const std::string* find_value(const KeyValues& kv, std::string_view key);

/// Six decimals, the fixed time format of every CSV.
std::string format_time(double t);
/// Nine significant digits.
std::string format_value(double v);
double parse_double(std::string_view text, std::string_view what);

KeyValues params_to_key_values(const GaitParams& p);
/// Keys absent from kv keep their defaults.
GaitParams params_from_key_values(const KeyValues& kv);

void write_trial(const TrialLog& log, const std::filesystem::path& dir);
TrialLog read_trial(const std::filesystem::path& dir);

void write_events_csv(const std::filesystem::path& path, std::span<const GaitEvent> events);
std::vector<GaitEvent> read_events_csv(const std::filesystem::path& path);

void write_labels_csv(const std::filesystem::path& path, std::span<const LegPhases> labels,
                      double rate_hz, double t0 = 0.0);
std::vector<LegPhases> read_labels_csv(const std::filesystem::path& path);

}  // namespace carry
