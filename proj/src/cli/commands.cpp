#include "carry/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "carry/errors.hpp"
#include "carry/metrics.hpp"
#include "carry/pipeline.hpp"
#include "carry/simgait.hpp"
#include "carry/trial_io.hpp"

namespace fs = std::filesystem;

namespace carry::cli {

namespace {

constexpr std::string_view kRunFormat = "carryassist-run/1";
constexpr std::string_view kRunManifest = "run_manifest.txt";
constexpr std::string_view kTrialManifest = "manifest.txt";

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  return f;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory " + dir.string());
}

std::string join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

// Name written into the `trial` column: the last path component, so that the
// same layout under different roots produces identical metric files.
std::string entry_name(const fs::path& p) {
  auto clean = p.lexically_normal();
  if (clean.filename().empty()) clean = clean.parent_path();
  return clean.filename().string();
}

// ---------------------------------------------------------------- simulate

struct SimOptions {
  GaitParams params;
  double duration_s = 60.0;
};

void add_param_flags(CLI::App& cmd, SimOptions& s) {
  auto& p = s.params;
  cmd.add_option("--duration", s.duration_s, "Trial length in seconds")->capture_default_str();
  cmd.add_option("--cadence", p.cadence_hz, "Strides per second")->capture_default_str();
  cmd.add_option("--stance-fraction", p.stance_fraction, "Stance share of the stride")->capture_default_str();
  cmd.add_option("--speed", p.speed_m_s, "Walking speed in m/s")->capture_default_str();
  cmd.add_option("--omega-amp", p.omega_amp_rad_s, "Peak hip angular velocity in rad/s")->capture_default_str();
  cmd.add_option("--load-peak", p.load_peak_n, "Peak force per insole cluster in N")->capture_default_str();
  cmd.add_option("--emg-level", p.emg_level, "Forearm activity as a fraction of MVC")->capture_default_str();
  cmd.add_option("--noise", p.noise_sigma, "Noise sigma as a fraction of channel amplitude")->capture_default_str();
  cmd.add_option("--seed", p.seed, "Random seed")->capture_default_str();
  cmd.add_option("--knee-rom", p.knee_rom_deg, "Knee range of motion in degrees")->capture_default_str();
  cmd.add_option("--emg-mvc-rms", p.emg_mvc_rms_mv, "Raw RMS of a full contraction in mV")->capture_default_str();
}

std::size_t count_strides(const TrialLog& log) {
  return static_cast<std::size_t>(
      std::count_if(log.truth_events.begin(), log.truth_events.end(), [](const GaitEvent& e) {
        return e.foot == Foot::Left && e.kind == GaitEventKind::HeelStrike;
      }));
}

TrialLog simulate_trial(const SimOptions& s) {
  s.params.validate();
  return generate(s.params, s.duration_s);
}

int cmd_simulate(const SimOptions& s, const fs::path& out_dir, std::ostream& out) {
  const TrialLog log = simulate_trial(s);
  ensure_dir(out_dir);
  write_trial(log, out_dir);
  out << "simulate: " << out_dir.string() << ": " << format_time(log.duration_s) << " s, "
      << log.channels.size() << " channels, " << count_strides(log) << " left strides, seed "
      << log.params.seed << '\n';
  return kExitOk;
}

// --------------------------------------------------------------------- run

struct RunArgs {
  std::string input;
  bool simulate = false;
  SimOptions sim;
  std::string mode = "foot-sensors";
  std::string out;
  double k_myo = ControllerConfig{}.k_myo;
  double k_stance = ControllerConfig{}.k_stance;
  double k_swing = ControllerConfig{}.k_swing;
  std::string ramp_rate = "unlimited";
  FsrDetectorConfig fsr;
  VelDetectorConfig vel;
  bool realtime = false;
  bool async_replay = false;
  std::size_t queue_capacity = 64;
};

std::optional<double> parse_ramp(const std::string& text) {
  if (text == "unlimited" || text == "none") return std::nullopt;
  try {
    return parse_double(text, "ramp-rate");
  } catch (const DataError& e) {
    throw UsageError(std::string("--ramp-rate: ") + e.what());
  }
}

void write_torque_csv(const fs::path& path, const std::vector<TorqueCommand>& commands) {
  auto f = open_output(path);
  f << "t_s,tau_left_nm,tau_right_nm\n";
  for (const auto& c : commands) {
    f << format_time(c.t) << ',' << format_value(c.tau_left) << ',' << format_value(c.tau_right) << '\n';
  }
  if (!f) throw DataError("write failed: " + path.string());
}

std::vector<std::string> score_header() {
  return {"mode",       "phase_accuracy", "state_accuracy", "event_recall", "hs_matched", "hs_missed",
          "hs_spurious", "hs_mae_s",      "to_matched",     "to_missed",    "to_spurious", "to_mae_s"};
}

void write_score_csv(const fs::path& path, DetectorMode mode, const DetectionScore& s) {
  auto f = open_output(path);
  f << join(score_header()) << '\n';
  f << join({std::string(to_string(mode)), format_value(s.phase_accuracy), format_value(s.state_accuracy),
             format_value(s.recall()), std::to_string(s.heel_strike.matched), std::to_string(s.heel_strike.missed),
             std::to_string(s.heel_strike.spurious), format_value(s.heel_strike.mae_s),
             std::to_string(s.toe_off.matched), std::to_string(s.toe_off.missed),
             std::to_string(s.toe_off.spurious), format_value(s.toe_off.mae_s)})
    << '\n';
}

KeyValues run_manifest(const RunArgs& a, const RunConfig& cfg, const TrialLog& log, const std::string& input_rel,
                       const RunResult& r) {
  KeyValues kv{{"format", std::string(kRunFormat)},
               {"input", input_rel},
               {"source", a.simulate ? "simulate" : "replay"}};
  if (a.simulate) {
    kv.emplace_back("duration_s", format_time(a.sim.duration_s));
    for (auto& p : params_to_key_values(a.sim.params)) kv.emplace_back("sim_" + p.first, p.second);
  }
  const auto& c = cfg.controller;
  kv.insert(kv.end(), {
      {"mode", std::string(to_string(cfg.mode))},
      {"control_rate_hz", format_value(c.rate_hz)},
      {"k_myo", format_value(c.k_myo)},
      {"k_stance", format_value(c.k_stance)},
      {"k_swing", format_value(c.k_swing)},
      {"ramp_rate_nm_s", c.ramp_rate_nm_s ? format_value(*c.ramp_rate_nm_s) : "unlimited"},
      {"fsr_contact_threshold_n", format_value(cfg.fsr.contact_threshold_n)},
      {"fsr_release_threshold_n", format_value(cfg.fsr.release_threshold_n)},
      {"fsr_min_phase_s", format_value(cfg.fsr.min_phase_s)},
      {"vel_zero_hysteresis_rad_s", format_value(cfg.vel.zero_hysteresis_rad_s)},
      {"vel_peak_min_rad_s", format_value(cfg.vel.peak_min_rad_s)},
      {"vel_peak_confirm_samples", std::to_string(cfg.vel.peak_confirm_samples)},
      {"vel_min_event_gap_s", format_value(cfg.vel.min_event_gap_s)},
      {"emg_mvc", format_value(log.emg_mvc)},
      {"samples", std::to_string(r.commands.size())},
      {"events", std::to_string(r.events.size())},
      {"stale_emg_ticks", std::to_string(r.stale_ticks)},
      {"scored", bool_text(log.has_truth())},
  });
  return kv;
}

int cmd_run(const RunArgs& a, std::ostream& out) {
  if (a.simulate == !a.input.empty()) throw UsageError("run needs exactly one of --input DIR or --simulate");
  const fs::path out_dir = a.out;
  ensure_dir(out_dir);

  RunConfig cfg;
  cfg.mode = parse_detector_mode(a.mode);
  cfg.controller.k_myo = a.k_myo;
  cfg.controller.k_stance = a.k_stance;
  cfg.controller.k_swing = a.k_swing;
  cfg.controller.ramp_rate_nm_s = parse_ramp(a.ramp_rate);
  cfg.fsr = a.fsr;
  cfg.vel = a.vel;

  TrialLog log;
  fs::path trial_dir;
  if (a.simulate) {
    log = simulate_trial(a.sim);
    trial_dir = out_dir / "trial";
    ensure_dir(trial_dir);
    write_trial(log, trial_dir);
  } else {
    trial_dir = a.input;
    log = read_trial(trial_dir);
  }
  cfg.controller.rate_hz = log.rates.control_hz;
  cfg.fsr.validate(cfg.controller.rate_hz);
  cfg.validate();

  RunOptions opts;
  opts.realtime = a.realtime;
  opts.async_replay = a.async_replay;
  opts.queue_capacity = a.queue_capacity;
  RunResult r = run_closed_loop(log, cfg, opts);
  std::stable_sort(r.events.begin(), r.events.end(),
                   [](const GaitEvent& x, const GaitEvent& y) { return x.t < y.t; });

  write_torque_csv(out_dir / "torque.csv", r.commands);
  write_events_csv(out_dir / "events.csv", r.events);
  write_labels_csv(out_dir / "labels.csv", r.labels, cfg.controller.rate_hz);

  std::optional<DetectionScore> score;
  if (log.has_truth()) {
    score = score_detection(r.events, r.labels, log.truth_events, log.truth_phases);
    write_score_csv(out_dir / "score.csv", cfg.mode, *score);
  }

  const fs::path rel = fs::absolute(trial_dir).lexically_normal().lexically_relative(
      fs::absolute(out_dir).lexically_normal());
  write_key_values(out_dir / kRunManifest, run_manifest(a, cfg, log, rel.generic_string(), r));

  out << "run: " << to_string(cfg.mode) << ", " << r.commands.size() << " ticks, " << r.events.size()
      << " events";
  if (score) {
    out << ", phase accuracy " << format_value(score->phase_accuracy) << ", recall " << format_value(score->recall());
  }
  out << '\n';
  return kExitOk;
}

// ----------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::vector<std::string> paths;
  std::string out;
  std::string emg_channel = std::string(channel::kEmgForearm);
  double window_s = *AnalysisOptions{}.window_s;
  bool full_window = false;
  unsigned jobs = 1;
};

std::vector<std::string> metrics_header() {
  return {"trial",    "mode",           "stride_length_m", "hip_rom_deg", "knee_rom_deg", "speed_m_s",
          "emg_rms",  "emg_p90",        "phase_accuracy",  "event_recall", "hs_mae_s",    "to_mae_s"};
}

// One metrics row. A run directory contributes its detector scores; a bare
// trial leaves those cells empty. Without reference events, a run's detected
// events segment the strides.
std::vector<std::string> analyze_one(const fs::path& path, AnalysisOptions opts) {
  std::string mode;
  std::optional<DetectionScore> score;
  TrialLog log;
  if (fs::exists(path / kRunManifest)) {
    const auto kv = read_key_values(path / kRunManifest);
    if (lookup(kv, "format") != kRunFormat) throw DataError("unsupported run format '" + lookup(kv, "format") + "'");
    mode = lookup(kv, "mode");
    log = read_trial(path / lookup(kv, "input"));
    auto events = read_events_csv(path / "events.csv");
    if (log.has_truth()) {
      const auto labels = read_labels_csv(path / "labels.csv");
      score = score_detection(events, labels, log.truth_events, log.truth_phases);
    } else {
      opts.events = std::move(events);
    }
  } else if (fs::exists(path / kTrialManifest)) {
    log = read_trial(path);
  } else {
    throw DataError("neither a trial nor a run directory");
  }
  const TrialMetrics m = trial_metrics(log, opts);
  std::vector<std::string> row{entry_name(path),
                               mode,
                               format_value(m.stride_length_m),
                               format_value(m.hip_rom_deg),
                               format_value(m.knee_rom_deg),
                               format_value(m.speed_m_s),
                               format_value(m.emg_rms),
                               format_value(m.emg_p90)};
  if (score) {
    row.insert(row.end(), {format_value(score->phase_accuracy), format_value(score->recall()),
                           format_value(score->heel_strike.mae_s), format_value(score->toe_off.mae_s)});
  } else {
    row.insert(row.end(), 4, std::string());
  }
  return row;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  AnalysisOptions opts;
  opts.emg_channel = a.emg_channel;
  if (!a.full_window && !(a.window_s > 0.0)) throw UsageError("--window must be positive");
  opts.window_s = a.full_window ? std::nullopt : std::optional<double>(a.window_s);

  const std::size_t n = a.paths.size();
  std::vector<std::optional<std::vector<std::string>>> rows(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        rows[i] = analyze_one(a.paths[i], opts);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned jobs = std::clamp<unsigned>(a.jobs, 1, static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  std::vector<std::jthread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  pool.clear();

  // Rows are emitted in argument order whatever the completion order was.
  std::ostringstream table;
  table << join(metrics_header()) << '\n';
  int status = kExitOk;
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i]) {
      table << join(*rows[i]) << '\n';
    } else {
      err << "analyze: " << a.paths[i] << ": " << errors[i] << '\n';
      status = kExitData;
    }
  }
  if (a.out.empty()) {
    out << table.str();
  } else {
    auto f = open_output(a.out);
    f << table.str();
  }
  return status;
}

// ----------------------------------------------------------------- compare

struct ColumnMeans {
  std::vector<std::string> names;
  std::vector<std::optional<double>> means;  // empty when the column holds no numbers
};

ColumnMeans column_means(const fs::path& path) {
  const CsvTable t = read_csv(path);
  if (t.rows.empty()) throw DataError(path.string() + ": no metric rows");
  ColumnMeans cm;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    bool numeric = true;
    for (const auto& row : t.rows) {
      if (c >= row.size() || row[c].empty()) continue;
      try {
        sum += parse_double(row[c], t.header[c]);
        ++count;
      } catch (const DataError&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) continue;  // label columns such as trial and mode
    cm.names.push_back(t.header[c]);
    cm.means.push_back(count ? std::optional<double>(sum / static_cast<double>(count)) : std::nullopt);
  }
  return cm;
}

std::string pct_change(std::optional<double> base, std::optional<double> value) {
  if (!base || !value || *base == 0.0) return {};
  return format_value(100.0 * (*value - *base) / std::abs(*base));
}

int cmd_compare(const std::vector<std::string>& files, const std::string& out_path, std::ostream& out) {
  if (files.size() < 2) throw UsageError("compare needs a baseline and at least one other metrics file");
  const ColumnMeans base = column_means(files.front());
  std::ostringstream table;
  table << "file,metric,baseline_mean,mean,percent_change\n";
  for (std::size_t i = 1; i < files.size(); ++i) {
    const ColumnMeans other = column_means(files[i]);
    if (other.names != base.names) {
      throw DataError(files[i] + ": metric columns differ from baseline " + files.front());
    }
    for (std::size_t c = 0; c < base.names.size(); ++c) {
      auto cell = [](std::optional<double> v) { return v ? format_value(*v) : std::string(); };
      table << join({entry_name(files[i]), base.names[c], cell(base.means[c]), cell(other.means[c]),
                     pct_change(base.means[c], other.means[c])})
            << '\n';
    }
  }
  if (out_path.empty()) {
    out << table.str();
  } else {
    auto f = open_output(out_path);
    f << table.str();
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Myoelectric hip-assist controller: simulate, run, analyze, compare"};
  app.name("carryassist");
  app.set_config("--config", "", "Read options from a key = value file; flags override it");
  app.require_subcommand(1);

  SimOptions sim;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic trial with ground truth");
  simulate->add_option("--out", sim_out, "Output trial directory")->required();
  add_param_flags(*simulate, sim);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run the closed loop offline at the control rate");
  auto* input_opt = run_cmd->add_option("--input", run_args.input, "Trial directory to replay");
  auto* sim_flag = run_cmd->add_flag("--simulate", run_args.simulate, "Generate the trial instead of replaying");
  input_opt->excludes(sim_flag);
  run_cmd->add_option("--out", run_args.out, "Output directory")->required();
  run_cmd->add_option("--mode", run_args.mode, "foot-sensors or actuators-velocity")->capture_default_str();
  run_cmd->add_option("--k-myo", run_args.k_myo, "Nm per unit normalized EMG")->capture_default_str();
  run_cmd->add_option("--k-stance", run_args.k_stance, "Stance-leg share")->capture_default_str();
  run_cmd->add_option("--k-swing", run_args.k_swing, "Swing-leg share")->capture_default_str();
  run_cmd->add_option("--ramp-rate", run_args.ramp_rate, "Torque slew limit in Nm/s, or unlimited")
      ->capture_default_str();
  run_cmd->add_option("--fsr-contact", run_args.fsr.contact_threshold_n, "Heel-strike force threshold (N)")
      ->capture_default_str();
  run_cmd->add_option("--fsr-release", run_args.fsr.release_threshold_n, "Toe-off force threshold (N)")
      ->capture_default_str();
  run_cmd->add_option("--fsr-min-phase", run_args.fsr.min_phase_s, "Minimum phase duration (s)")
      ->capture_default_str();
  run_cmd->add_option("--vel-hysteresis", run_args.vel.zero_hysteresis_rad_s, "Zero-crossing band (rad/s)")
      ->capture_default_str();
  run_cmd->add_option("--vel-peak-min", run_args.vel.peak_min_rad_s, "Minimum toe-off peak (rad/s)")
      ->capture_default_str();
  run_cmd->add_option("--vel-peak-confirm", run_args.vel.peak_confirm_samples, "Samples below the running max")
      ->capture_default_str();
  run_cmd->add_option("--vel-min-gap", run_args.vel.min_event_gap_s, "Minimum gap between events (s)")
      ->capture_default_str();
  run_cmd->add_flag("--realtime", run_args.realtime, "Pace ticks against the wall clock");
  run_cmd->add_flag("--async-replay", run_args.async_replay, "Feed frames through a producer thread");
  run_cmd->add_option("--queue-capacity", run_args.queue_capacity, "Frames buffered in async replay")
      ->capture_default_str();
  add_param_flags(*run_cmd, run_args.sim);

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Compute trial metrics and detector scores");
  analyze->add_option("paths", an.paths, "Trial or run directories")->required();
  analyze->add_option("--out", an.out, "Metrics CSV (stdout when omitted)");
  analyze->add_option("--emg-channel", an.emg_channel, "EMG channel to summarize")->capture_default_str();
  analyze->add_option("--window", an.window_s, "Trailing analysis window (s)")->capture_default_str();
  analyze->add_flag("--full-window", an.full_window, "Use the whole recording");
  analyze->add_option("--jobs", an.jobs, "Worker threads")->capture_default_str();

  std::vector<std::string> cmp_files;
  std::string cmp_out;
  auto* compare = app.add_subcommand("compare", "Percent change of metric means versus a baseline");
  compare->add_option("files", cmp_files, "BASELINE followed by other metrics CSVs")->required();
  compare->add_option("--out", cmp_out, "Output CSV (stdout when omitted)");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "carryassist: " << e.what() << '\n';
    for (auto* sub : app.get_subcommands()) {
      err << sub->help();
      return kExitUsage;
    }
    err << app.help();
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, sim_out, out);
    if (run_cmd->parsed()) return cmd_run(run_args, out);
    if (analyze->parsed()) return cmd_analyze(an, out, err);
    if (compare->parsed()) return cmd_compare(cmp_files, cmp_out, out);
  } catch (const std::invalid_argument& e) {
    err << "carryassist: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    // DataError, contract violations and I/O failures
    err << "carryassist: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace carry::cli
