#include "carry/trial_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "carry/errors.hpp"

namespace carry {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kTrialFormat = "carryassist-trial/1";
constexpr std::string_view kManifest = "manifest.txt";
constexpr std::string_view kTruthLabels = "truth_labels.csv";
constexpr std::string_view kTruthEvents = "truth_events.csv";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

struct FileGroup {
  std::string file;
  double rate_hz;
  std::vector<std::string> columns;
};

std::vector<FileGroup> trial_groups(const TrialLog& log) {
  std::vector<FileGroup> groups;
  const double fs = log.rates.control_hz;
  groups.push_back({"omega.csv", fs, {std::string(channel::kOmegaLeft), std::string(channel::kOmegaRight)}});
  for (Foot foot : {Foot::Left, Foot::Right}) {
    FileGroup g{"insole_" + std::string(to_string(foot)) + ".csv", fs, {}};
    for (std::size_t i = 0; i < 8; ++i) g.columns.push_back(channel::insole(foot, i));
    groups.push_back(std::move(g));
  }
  groups.push_back({"kinematics.csv", fs,
                    {std::string(channel::kBodyX), std::string(channel::kLeftX), std::string(channel::kLeftY),
                     std::string(channel::kRightX), std::string(channel::kRightY),
                     std::string(channel::kHipLeft), std::string(channel::kHipRight),
                     std::string(channel::kKneeLeft), std::string(channel::kKneeRight)}});
  groups.push_back({"emg.csv", log.rates.emg_hz, {std::string(channel::kEmgForearm)}});

  // Keep only channels the log actually has; anything unclaimed goes to extra.csv
  // at the control rate.
  std::vector<FileGroup> present;
  std::vector<std::string> claimed;
  for (auto& g : groups) {
    std::vector<std::string> cols;
    for (auto& c : g.columns) {
      claimed.push_back(c);
      if (log.has_channel(c)) cols.push_back(c);
    }
    if (!cols.empty()) present.push_back({g.file, g.rate_hz, std::move(cols)});
  }
  FileGroup extra{"extra.csv", fs, {}};
  for (const auto& [name, ts] : log.channels) {
    if (std::find(claimed.begin(), claimed.end(), name) == claimed.end()) extra.columns.push_back(name);
  }
  if (!extra.columns.empty()) present.push_back(std::move(extra));
  return present;
}

void write_group(const fs::path& path, const TrialLog& log, const FileGroup& g) {
  std::vector<const TimeSeries*> cols;
  std::size_t n = 0;
  for (const auto& c : g.columns) {
    cols.push_back(&log.channel(c));
    n = std::max(n, cols.back()->size());
  }
  for (const auto* ts : cols) {
    if (ts->size() != n) throw DataError("channels written to " + g.file + " differ in length");
  }
  auto out = open_out(path);
  out << "t_s";
  for (const auto& c : g.columns) out << ',' << c;
  out << '\n';
  const TimeSeries& first = *cols.front();
  std::string line;
  for (std::size_t k = 0; k < n; ++k) {
    line = format_time(first.time_at(k));
    for (const auto* ts : cols) {
      line += ',';
      line += format_value((*ts)[k]);
    }
    line += '\n';
    out << line;
  }
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError("missing column '" + std::string(name) + "'");
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file, header row required");
  t.header = split(line, ',');
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto row = split(line, ',');
    if (row.size() != t.header.size()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, got " + std::to_string(row.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

KeyValues read_key_values(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  KeyValues kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw DataError(path.string() + ": expected 'key = value', got '" + std::string(s) + "'");
    kv.emplace_back(std::string(trim(s.substr(0, eq))), std::string(trim(s.substr(eq + 1))));
  }
  return kv;
}

void write_key_values(const fs::path& path, const KeyValues& kv) {
  auto out = open_out(path);
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

const std::string* find_value(const KeyValues& kv, std::string_view key) {
  for (const auto& [k, v] : kv) {
    if (k == key) return &v;
  }
  return nullptr;
}

const std::string& lookup(const KeyValues& kv, std::string_view key) {
  if (const auto* v = find_value(kv, key)) return *v;
  throw DataError("manifest is missing '" + std::string(key) + "'");
}

std::string format_time(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", t);
  return buf;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

double parse_double(std::string_view text, std::string_view what) {
  const auto s = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw DataError("bad number '" + std::string(s) + "' for " + std::string(what));
  }
  return v;
}

KeyValues params_to_key_values(const GaitParams& p) {
  return {
      {"cadence_hz", format_value(p.cadence_hz)},
      {"stance_fraction", format_value(p.stance_fraction)},
      {"speed_m_s", format_value(p.speed_m_s)},
      {"omega_amp_rad_s", format_value(p.omega_amp_rad_s)},
      {"load_peak_n", format_value(p.load_peak_n)},
      {"emg_level", format_value(p.emg_level)},
      {"noise_sigma", format_value(p.noise_sigma)},
      {"seed", std::to_string(p.seed)},
      {"knee_rom_deg", format_value(p.knee_rom_deg)},
      {"emg_mvc_rms_mv", format_value(p.emg_mvc_rms_mv)},
  };
}

GaitParams params_from_key_values(const KeyValues& kv) {
  GaitParams p;
  auto set = [&kv](std::string_view key, double& field) {
    if (const auto* v = find_value(kv, key)) field = parse_double(*v, key);
  };
  set("cadence_hz", p.cadence_hz);
  set("stance_fraction", p.stance_fraction);
  set("speed_m_s", p.speed_m_s);
  set("omega_amp_rad_s", p.omega_amp_rad_s);
  set("load_peak_n", p.load_peak_n);
  set("emg_level", p.emg_level);
  set("noise_sigma", p.noise_sigma);
  set("knee_rom_deg", p.knee_rom_deg);
  set("emg_mvc_rms_mv", p.emg_mvc_rms_mv);
  if (const auto* v = find_value(kv, "seed")) {
    std::uint64_t seed = 0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), seed);
    if (res.ec != std::errc{} || res.ptr != v->data() + v->size()) throw DataError("bad seed '" + *v + "'");
    p.seed = seed;
  }
  return p;
}

void write_trial(const TrialLog& log, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());

  const auto groups = trial_groups(log);
  KeyValues kv{
      {"format", std::string(kTrialFormat)},
      {"duration_s", format_time(log.duration_s)},
      {"control_rate_hz", format_value(log.rates.control_hz)},
      {"emg_rate_hz", format_value(log.rates.emg_hz)},
      {"emg_mvc", format_value(log.emg_mvc)},
  };
  for (auto& p : params_to_key_values(log.params)) kv.push_back(std::move(p));

  std::string channels;
  std::string files;
  for (const auto& g : groups) {
    for (const auto& c : g.columns) channels += (channels.empty() ? "" : ",") + c;
    files += (files.empty() ? "" : ",") + g.file + ":" + format_value(g.rate_hz);
    write_group(dir / g.file, log, g);
  }
  kv.emplace_back("channels", channels);
  kv.emplace_back("files", files);

  if (log.has_truth()) {
    write_labels_csv(dir / kTruthLabels, log.truth_phases, log.rates.control_hz);
    write_events_csv(dir / kTruthEvents, log.truth_events);
    kv.emplace_back("truth", std::string(kTruthLabels) + "," + std::string(kTruthEvents));
  } else {
    kv.emplace_back("truth", "none");
  }
  write_key_values(dir / kManifest, kv);
}

TrialLog read_trial(const fs::path& dir) {
  const auto kv = read_key_values(dir / kManifest);
  if (lookup(kv, "format") != kTrialFormat) {
    throw DataError(dir.string() + ": unsupported trial format '" + lookup(kv, "format") + "'");
  }
  TrialLog log;
  log.params = params_from_key_values(kv);
  log.duration_s = parse_double(lookup(kv, "duration_s"), "duration_s");
  log.rates.control_hz = parse_double(lookup(kv, "control_rate_hz"), "control_rate_hz");
  log.rates.emg_hz = parse_double(lookup(kv, "emg_rate_hz"), "emg_rate_hz");
  log.emg_mvc = parse_double(lookup(kv, "emg_mvc"), "emg_mvc");

  for (const auto& entry : split(lookup(kv, "files"), ',')) {
    const auto colon = entry.rfind(':');
    if (colon == std::string::npos) throw DataError("manifest files entry '" + entry + "' lacks ':rate'");
    const std::string file = entry.substr(0, colon);
    const double rate = parse_double(std::string_view(entry).substr(colon + 1), "file rate");
    const auto table = read_csv(dir / file);
    if (table.header.empty() || table.header.front() != "t_s") {
      throw DataError((dir / file).string() + ": first column must be t_s");
    }
    const double t0 = table.rows.empty() ? 0.0 : parse_double(table.rows.front().front(), "t_s");
    for (std::size_t c = 1; c < table.header.size(); ++c) {
      std::vector<double> values;
      values.reserve(table.rows.size());
      for (const auto& row : table.rows) values.push_back(parse_double(row[c], table.header[c]));
      log.channels.insert_or_assign(table.header[c], TimeSeries(std::move(values), rate, t0));
    }
  }

  if (lookup(kv, "truth") != "none") {
    log.truth_phases = read_labels_csv(dir / kTruthLabels);
    log.truth_events = read_events_csv(dir / kTruthEvents);
  }
  return log;
}

void write_events_csv(const fs::path& path, std::span<const GaitEvent> events) {
  auto out = open_out(path);
  out << "t_s,foot,kind\n";
  for (const auto& e : events) {
    out << format_time(e.t) << ',' << to_string(e.foot) << ',' << to_string(e.kind) << '\n';
  }
}

std::vector<GaitEvent> read_events_csv(const fs::path& path) {
  const auto t = read_csv(path);
  const auto ct = t.column("t_s");
  const auto cf = t.column("foot");
  const auto ck = t.column("kind");
  std::vector<GaitEvent> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    out.push_back({parse_double(row[ct], "t_s"), parse_foot(row[cf]), parse_event_kind(row[ck])});
  }
  return out;
}

void write_labels_csv(const fs::path& path, std::span<const LegPhases> labels, double rate_hz, double t0) {
  auto out = open_out(path);
  out << "t_s,left_phase,right_phase,gait_state\n";
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const auto& p = labels[k];
    out << format_time(t0 + static_cast<double>(k) / rate_hz) << ',' << to_string(p.left) << ','
        << to_string(p.right) << ',' << to_string(classify(p)) << '\n';
  }
}

std::vector<LegPhases> read_labels_csv(const fs::path& path) {
  const auto t = read_csv(path);
  const auto cl = t.column("left_phase");
  const auto cr = t.column("right_phase");
  std::vector<LegPhases> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) out.push_back({parse_phase(row[cl]), parse_phase(row[cr])});
  return out;
}

}  // namespace carry
