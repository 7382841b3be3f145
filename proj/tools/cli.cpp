#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "odbguard/attack.hpp"
#include "odbguard/detect.hpp"
#include "odbguard/dpmixreg.hpp"
#include "odbguard/error.hpp"
#include "odbguard/eval.hpp"
#include "odbguard/model.hpp"
#include "odbguard/obdlink.hpp"
#include "odbguard/pipeline.hpp"
#include "odbguard/preprocess.hpp"
#include "odbguard/trace.hpp"
#include "odbguard/vehsim.hpp"

namespace odbguard::cli {

namespace {

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err) {}
  void operator()(const std::string& msg) const {
    if (!quiet) err_ << "[odbguard] " << msg << '\n';
  }
  bool quiet = false;

 private:
  std::ostream& err_;
};

template <typename T>
void override_if(const std::optional<T>& flag, T& field) {
  if (flag) field = *flag;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag,
                           const std::optional<std::uint64_t>& from_config, const char* command) {
  if (flag) return *flag;
  if (from_config) return *from_config;
  throw UsageError(std::string(command) + " needs --seed (or a config file that sets \"seed\")");
}

// Seed key of a JSON config, when present and not null.
std::optional<std::uint64_t> config_seed(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  try {
    const auto j = nlohmann::json::parse(in);
    if (auto it = j.find("seed"); it != j.end() && !it->is_null()) return it->get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return std::nullopt;
}

void write_text(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  body(out);
  if (!out) throw IoError("write to " + path.string() + " failed");
}

std::vector<AlignedRecord> read_all_aligned(const std::vector<std::string>& paths) {
  std::vector<AlignedRecord> all;
  for (const auto& p : paths) {
    auto part = read_aligned(std::filesystem::path(p));
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

// Shared Gibbs flags of fit and pipeline.
struct GibbsFlags {
  std::optional<int> n_iter, burn_in, thin, j_max;

  void add(CLI::App* cmd) {
    cmd->add_option("--iter", n_iter, "Gibbs sweeps");
    cmd->add_option("--burn-in", burn_in, "sweeps discarded before storing draws");
    cmd->add_option("--thin", thin, "keep every n-th sweep after burn-in");
    cmd->add_option("--jmax", j_max, "truncation level of the mixture");
  }
  void apply(HyperParams& hp) const {
    override_if(n_iter, hp.n_iter);
    override_if(burn_in, hp.burn_in);
    override_if(thin, hp.thin);
    override_if(j_max, hp.j_max);
  }
};

}  // namespace

int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Logger log(err);

  CLI::App app{"Telematics speed-manipulation simulator and detector", "odbguard"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("-q,--quiet", log.quiet, "suppress progress logging");

  std::optional<std::uint64_t> seed;
  std::optional<std::string> config_path;
  std::function<void()> action;

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a driving trip into a trace CSV");
  std::optional<std::string> sim_scenario;
  std::string sim_out;
  std::optional<double> sim_duration, sim_hard_brakes;
  std::optional<std::string> sim_save_scenario;
  sim->add_option("--scenario", sim_scenario, "scenario JSON; a random mixed drive when omitted");
  sim->add_option("--config", config_path, "pipeline config supplying seed and drive options");
  sim->add_option("--seed", seed, "random seed");
  sim->add_option("--duration", sim_duration, "mixed drive length in seconds");
  sim->add_option("--hard-brakes", sim_hard_brakes, "expected hard brakes in a mixed drive");
  sim->add_option("--save-scenario", sim_save_scenario, "also write the scenario that was run");
  sim->add_option("-o,--out", sim_out, "output trace CSV")->required();
  sim->callback([&] {
    action = [&] {
      PipelineConfig cfg;
      if (config_path) cfg = load_pipeline_config(*config_path);
      override_if(sim_duration, cfg.drive.duration_s);
      override_if(sim_hard_brakes, cfg.drive.hard_brakes);
      Scenario scenario;
      if (sim_scenario) {
        scenario = load_scenario(*sim_scenario);
        const auto s = resolve_seed(seed, config_path ? cfg.seed : config_seed(*sim_scenario), "simulate");
        scenario.seed = s;
      } else {
        scenario = make_mixed_scenario(resolve_seed(seed, cfg.seed, "simulate"), cfg.drive);
      }
      const auto trip = generate_trip(scenario);
      write_trip(trip, std::filesystem::path(sim_out));
      if (sim_save_scenario) save_scenario(scenario, *sim_save_scenario);
      log("simulated " + std::to_string(trip.speed_series.size()) + " speed and " +
          std::to_string(trip.accel_series.size()) + " accel samples over " +
          std::to_string(scenario.duration_s()) + " s -> " + sim_out);
    };
  });

  // attack
  auto* atk = app.add_subcommand("attack", "Apply a speed-manipulation attack to a trace");
  std::string atk_in, atk_out, atk_kind = "flatten";
  std::optional<std::string> atk_recorded;
  int atk_threshold = FlattenConfig{}.threshold_kmh_per_s;
  atk->add_option("-i,--in", atk_in, "input trace CSV")->required();
  atk->add_option("-o,--out", atk_out, "attacked trace CSV")->required();
  atk->add_option("--kind", atk_kind, "flatten or replay")->check(CLI::IsMember({"flatten", "replay"}));
  atk->add_option("--threshold", atk_threshold, "hard-brake threshold in km/h per reading");
  atk->add_option("--recording,--recorded", atk_recorded, "clean trace to replay (replay only)");
  atk->callback([&] {
    action = [&] {
      const auto trip = read_trip(std::filesystem::path(atk_in));
      RawTrip attacked;
      if (atk_kind == "flatten") {
        attacked = flatten_trip(trip, {atk_threshold});
      } else {
        if (!atk_recorded) throw UsageError("replay needs --recorded");
        attacked = replay_attack(trip, {read_trip(std::filesystem::path(*atk_recorded))});
      }
      write_trip(attacked, std::filesystem::path(atk_out));
      const auto& labels = *attacked.truth_labels;
      log(atk_kind + ": " + std::to_string(std::count(labels.begin(), labels.end(), true)) + " of " +
          std::to_string(labels.size()) + " readings altered -> " + atk_out);
    };
  });

  // session
  auto* ses = app.add_subcommand("session", "Run a trace through the telematics dongle");
  std::string ses_in, ses_out;
  std::optional<std::string> ses_events;
  int ses_threshold = DeviceState{}.hard_brake_threshold_kmh_per_s;
  ses->add_option("-i,--in", ses_in, "input trace CSV")->required();
  ses->add_option("-o,--out", ses_out, "observed trace CSV")->required();
  ses->add_option("--events", ses_events, "trip event log (JSON lines); stdout when omitted");
  ses->add_option("--threshold", ses_threshold, "dongle hard-brake threshold in km/h per reading");
  ses->callback([&] {
    action = [&] {
      DeviceState device;
      device.hard_brake_threshold_kmh_per_s = ses_threshold;
      const auto session = run_session(read_trip(std::filesystem::path(ses_in)), device);
      write_trip(session.observed, std::filesystem::path(ses_out));
      if (ses_events) {
        write_events(session.events, std::filesystem::path(*ses_events));
      } else {
        write_events(session.events, out);
      }
      const auto beeps = std::count_if(session.events.begin(), session.events.end(), [](const TripEvent& e) {
        return e.kind == TripEventKind::kHardBrakeBeep;
      });
      log("session: " + std::to_string(session.observed.speed_series.size()) + " speed replies, " +
          std::to_string(beeps) + " hard-brake beeps");
    };
  });

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Align speed variation with windowed acceleration");
  std::string pre_in, pre_out;
  std::optional<double> pre_window;
  std::optional<int> pre_min_samples;
  pre->add_option("-i,--in", pre_in, "trace CSV")->required();
  pre->add_option("-o,--out", pre_out, "aligned CSV")->required();
  pre->add_option("--config", config_path, "pipeline config supplying preprocess options");
  pre->add_option("--window", pre_window, "acceleration window in seconds");
  pre->add_option("--min-samples", pre_min_samples, "samples required per window");
  pre->callback([&] {
    action = [&] {
      PreprocessConfig cfg;
      if (config_path) cfg = load_pipeline_config(*config_path).preprocess;
      override_if(pre_window, cfg.window_s);
      override_if(pre_min_samples, cfg.min_samples_per_window);
      cfg.validate();
      const auto result = preprocess_trip(read_trip(std::filesystem::path(pre_in)), cfg);
      write_aligned(result.records, std::filesystem::path(pre_out));
      log("aligned " + std::to_string(result.records.size()) + " records (" +
          std::to_string(result.dropped) + " dropped) -> " + pre_out);
    };
  });

  // fit
  auto* fitc = app.add_subcommand("fit", "Fit the mixture-of-regressions model by Gibbs sampling");
  std::vector<std::string> fit_data;
  std::string fit_out;
  std::optional<std::string> fit_hyper;
  GibbsFlags fit_flags;
  fitc->add_option("-d,--data", fit_data, "aligned CSV files of clean driving")->required();
  fitc->add_option("-o,--out", fit_out, "posterior JSON")->required();
  fitc->add_option("--config", config_path, "pipeline config supplying seed and hyperparameters");
  fitc->add_option("--hyper", fit_hyper, "hyperparameter JSON");
  fitc->add_option("--seed", seed, "random seed");
  fit_flags.add(fitc);
  fitc->callback([&] {
    action = [&] {
      HyperParams hp;
      std::optional<std::uint64_t> cfg_seed;
      if (config_path) {
        const auto cfg = load_pipeline_config(*config_path);
        hp = cfg.hyperparams;
        cfg_seed = cfg.seed;
      }
      if (fit_hyper) {
        hp = load_hyperparams(*fit_hyper);
        if (auto s = config_seed(*fit_hyper)) cfg_seed = s;
      }
      hp.seed = resolve_seed(seed, cfg_seed, "fit");
      fit_flags.apply(hp);
      hp.validate();
      const auto records = read_all_aligned(fit_data);
      log("fitting " + std::to_string(records.size()) + " records, " + std::to_string(hp.n_iter) + " sweeps");
      const int every = std::max(1, hp.n_iter / 10);
      const auto model = fit(records, hp, [&](int iter, int total) {
        if (iter % every == 0 || iter == total) log("gibbs sweep " + std::to_string(iter) + "/" + std::to_string(total));
      });
      save_posterior(model, std::filesystem::path(fit_out));
      const auto summary = nonempty_components(model, 0.01);
      for (const auto& c : summary.components) {
        std::ostringstream line;
        line << "component " << c.index << ": weight " << c.mean_weight << ", beta (" << c.beta_mean[0]
             << ", " << c.beta_mean[1] << ", " << c.beta_mean[2] << "), sigma2 " << c.sigma2_mean;
        log(line.str());
      }
      log("wrote " + std::to_string(model.draws.size()) + " draws -> " + fit_out);
    };
  });

  // detect
  auto* det = app.add_subcommand("detect", "Flag records outside their predicted range");
  std::string det_model, det_data, det_out;
  std::optional<double> det_level;
  std::optional<std::size_t> det_samples;
  det->add_option("-m,--model", det_model, "posterior JSON")->required();
  det->add_option("-d,--data", det_data, "aligned CSV")->required();
  det->add_option("-o,--out", det_out, "report (JSON lines)")->required();
  det->add_option("--config", config_path, "pipeline config supplying seed, level and samples");
  det->add_option("--seed", seed, "random seed");
  det->add_option("--level", det_level, "credible level of the predicted range");
  det->add_option("--samples", det_samples, "predictive samples per record");
  det->callback([&] {
    action = [&] {
      PipelineConfig cfg;
      if (config_path) cfg = load_pipeline_config(*config_path);
      override_if(det_level, cfg.level);
      override_if(det_samples, cfg.predictive_samples);
      const auto s = resolve_seed(seed, cfg.seed, "detect");
      const auto model = load_posterior(std::filesystem::path(det_model));
      const auto records = read_aligned(std::filesystem::path(det_data));
      const auto report = detect_trip(records, model, cfg.level, cfg.predictive_samples, s);
      write_report(report, std::filesystem::path(det_out));
      log("flagged " + std::to_string(report.n_flagged) + " of " + std::to_string(report.entries.size()) +
          " records -> " + det_out);
    };
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Score a detection report against truth labels");
  std::string ev_report, ev_data, ev_out;
  std::optional<std::string> ev_roc;
  double ev_gap = 2.0;
  ev->add_option("-r,--report", ev_report, "detection report")->required();
  ev->add_option("-d,--data", ev_data, "labelled aligned CSV the report was made from")->required();
  ev->add_option("-o,--out", ev_out, "metrics JSON")->required();
  ev->add_option("--roc", ev_roc, "ROC points CSV");
  ev->add_option("--gap", ev_gap, "max seconds between members of one event");
  ev->callback([&] {
    action = [&] {
      const auto report = read_report(std::filesystem::path(ev_report));
      const auto records = read_aligned(std::filesystem::path(ev_data));
      EventAnalysis events;
      auto metrics = evaluate_report(report, records);
      std::vector<bool> flags, labels;
      std::vector<double> times;
      for (std::size_t i = 0; i < records.size(); ++i) {
        flags.push_back(report.entries[i].flagged);
        labels.push_back(*records[i].label);
        times.push_back(static_cast<double>(records[i].t));
      }
      events = group_events(times, flags, labels, ev_gap);
      write_text(ev_out, [&](std::ostream& o) { write_metrics(metrics, events, o); });
      if (ev_roc) write_text(*ev_roc, [&](std::ostream& o) { write_roc_csv(metrics.roc, o); });
      std::ostringstream line;
      line << "fpr " << (metrics.fpr ? std::to_string(*metrics.fpr) : "n/a") << ", fnr "
           << (metrics.fnr ? std::to_string(*metrics.fnr) : "n/a") << ", auc "
           << (metrics.auc ? std::to_string(*metrics.auc) : "n/a");
      log(line.str());
    };
  });

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Simulate, attack, fit, detect and evaluate end to end");
  std::optional<std::string> pipe_out_dir, pipe_attack;
  std::optional<int> pipe_train, pipe_test, pipe_threshold;
  std::optional<double> pipe_level, pipe_duration, pipe_fraction;
  std::optional<std::size_t> pipe_samples;
  GibbsFlags pipe_flags;
  pipe->add_option("-c,--config", config_path, "pipeline config JSON")->required();
  pipe->add_option("--seed", seed, "random seed");
  pipe->add_option("--out-dir", pipe_out_dir, "output directory");
  pipe->add_option("--train-trips", pipe_train, "clean trips to fit on");
  pipe->add_option("--test-trips", pipe_test, "trips to run detection on");
  pipe->add_option("--attacked-fraction", pipe_fraction, "share of test trips attacked");
  pipe->add_option("--attack", pipe_attack, "none, flatten or replay");
  pipe->add_option("--threshold", pipe_threshold, "flatten threshold in km/h per reading");
  pipe->add_option("--duration", pipe_duration, "seconds per simulated trip");
  pipe->add_option("--level", pipe_level, "credible level");
  pipe->add_option("--samples", pipe_samples, "predictive samples per record");
  pipe_flags.add(pipe);
  pipe->callback([&] {
    action = [&] {
      auto cfg = load_pipeline_config(*config_path);
      if (seed) cfg.seed = seed;
      if (pipe_out_dir) cfg.out_dir = *pipe_out_dir;
      override_if(pipe_train, cfg.train_trips);
      override_if(pipe_test, cfg.test_trips);
      override_if(pipe_fraction, cfg.attacked_fraction);
      if (pipe_attack) cfg.attack = parse_attack_kind(*pipe_attack);
      override_if(pipe_threshold, cfg.flatten_threshold_kmh);
      override_if(pipe_duration, cfg.drive.duration_s);
      override_if(pipe_level, cfg.level);
      override_if(pipe_samples, cfg.predictive_samples);
      pipe_flags.apply(cfg.hyperparams);
      cfg.seed = resolve_seed(std::nullopt, cfg.seed, "pipeline");
      const auto result = run_pipeline(cfg, [&](const std::string& m) { log(m); });
      write_pipeline_outputs(result, cfg.out_dir);
      const auto& m = result.metrics;
      std::ostringstream line;
      line << "fpr " << m.fpr.value_or(-1) << ", fnr " << m.fnr.value_or(-1) << ", auc "
           << m.auc.value_or(-1) << ", true events " << result.events.true_events << " (detected "
           << result.events.detected_true_events << ")";
      log(line.str());
      log("outputs in " + cfg.out_dir.string());
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kOk;
    if (app.get_subcommands().empty()) err << '\n' << app.help();
    return kUsage;
  }

  try {
    if (action) action();
    return kOk;
  } catch (const Error& e) {
    err << "odbguard: error: " << e.what() << '\n';
    switch (e.category()) {
      case Error::Category::kUsage: return kUsage;
      case Error::Category::kIo: return kIo;
      case Error::Category::kNumeric: return kNumeric;
    }
  } catch (const std::filesystem::filesystem_error& e) {
    err << "odbguard: error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "odbguard: internal error: " << e.what() << '\n';
  }
  return kInternal;
}

}  // namespace odbguard::cli
