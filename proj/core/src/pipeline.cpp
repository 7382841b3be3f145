#include "odbguard/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "json_convert.hpp"
#include "odbguard/attack.hpp"
#include "odbguard/dpmixreg.hpp"
#include "odbguard/error.hpp"
#include "odbguard/obdlink.hpp"
#include "odbguard/rng.hpp"

namespace odbguard {

namespace {

// Substream ranges per corpus role.
constexpr std::uint64_t kTrainStream = 1'000'000;
constexpr std::uint64_t kTestStream = 2'000'000;
constexpr std::uint64_t kReplaySourceStream = 3'000'000;
constexpr std::uint64_t kDetectStream = 4'000'000;

std::uint64_t require_seed(const PipelineConfig& config) {
  if (!config.seed) throw UsageError("pipeline needs a seed (config 'seed' or --seed)");
  return *config.seed;
}

RawTrip simulate_trip(const PipelineConfig& config, std::uint64_t stream, const std::string& name) {
  auto scenario = make_mixed_scenario(substream_seed(require_seed(config), stream), config.drive);
  scenario.name = name;
  return generate_trip(scenario);
}

std::vector<AlignedRecord> concat_records(const std::vector<CorpusTrip>& trips) {
  std::vector<AlignedRecord> all;
  for (const auto& trip : trips) all.insert(all.end(), trip.records.begin(), trip.records.end());
  return all;
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  body(out);
  if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace

const char* to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone: return "none";
    case AttackKind::kFlatten: return "flatten";
    case AttackKind::kReplay: return "replay";
  }
  return "?";
}

AttackKind parse_attack_kind(const std::string& name) {
  if (name == "none") return AttackKind::kNone;
  if (name == "flatten") return AttackKind::kFlatten;
  if (name == "replay") return AttackKind::kReplay;
  throw UsageError("unknown attack kind '" + name + "' (expected none, flatten or replay)");
}

void PipelineConfig::validate() const {
  hyperparams.validate();
  preprocess.validate();
  if (train_trips < 1) throw UsageError("train_trips must be at least 1");
  if (test_trips < 1) throw UsageError("test_trips must be at least 1");
  if (!(attacked_fraction >= 0.0 && attacked_fraction <= 1.0)) {
    throw UsageError("attacked_fraction must lie in [0, 1]");
  }
  if (flatten_threshold_kmh < 1) throw UsageError("flatten threshold must be at least 1 km/h");
  if (!(level > 0.0 && level < 1.0)) throw UsageError("level must lie in (0, 1)");
  if (predictive_samples < kMinPredictiveSamples) {
    throw UsageError("predictive_samples must be at least " + std::to_string(kMinPredictiveSamples));
  }
  if (!(drive.duration_s > 0.0)) throw UsageError("drive duration must be positive");
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  PipelineConfig c;
  try {
    const auto j = nlohmann::json::parse(in);
    read_opt(j, "hyperparams", c.hyperparams);
    read_opt(j, "preprocess", c.preprocess);
    if (auto d = j.find("drive"); d != j.end()) {
      read_opt(*d, "duration_s", c.drive.duration_s);
      read_opt(*d, "hard_brakes", c.drive.hard_brakes);
      read_opt(*d, "hard_brake_min_ms2", c.drive.hard_brake_min_ms2);
      read_opt(*d, "hard_brake_max_ms2", c.drive.hard_brake_max_ms2);
      read_opt(*d, "noise", c.drive.noise);
    }
    if (auto k = j.find("corpus"); k != j.end()) {
      read_opt(*k, "train_trips", c.train_trips);
      read_opt(*k, "test_trips", c.test_trips);
      read_opt(*k, "attacked_fraction", c.attacked_fraction);
    }
    if (auto a = j.find("attack"); a != j.end()) {
      if (auto kind = a->find("kind"); kind != a->end()) c.attack = parse_attack_kind(kind->get<std::string>());
      read_opt(*a, "threshold_kmh", c.flatten_threshold_kmh);
    }
    if (auto d = j.find("detect"); d != j.end()) {
      read_opt(*d, "level", c.level);
      read_opt(*d, "samples", c.predictive_samples);
    }
    if (auto s = j.find("seed"); s != j.end() && !s->is_null()) c.seed = s->get<std::uint64_t>();
    if (auto o = j.find("out_dir"); o != j.end()) c.out_dir = o->get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

void save_pipeline_config(const PipelineConfig& c, const std::filesystem::path& path) {
  nlohmann::json j = {
      {"hyperparams", c.hyperparams},
      {"preprocess", c.preprocess},
      {"drive",
       {{"duration_s", c.drive.duration_s},
        {"hard_brakes", c.drive.hard_brakes},
        {"hard_brake_min_ms2", c.drive.hard_brake_min_ms2},
        {"hard_brake_max_ms2", c.drive.hard_brake_max_ms2},
        {"noise", c.drive.noise}}},
      {"corpus",
       {{"train_trips", c.train_trips},
        {"test_trips", c.test_trips},
        {"attacked_fraction", c.attacked_fraction}}},
      {"attack", {{"kind", to_string(c.attack)}, {"threshold_kmh", c.flatten_threshold_kmh}}},
      {"detect", {{"level", c.level}, {"samples", c.predictive_samples}}},
      {"seed", c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr)},
      {"out_dir", c.out_dir.string()},
  };
  write_file(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

RawTrip training_trip(const PipelineConfig& config, int index) {
  const auto raw = simulate_trip(config, kTrainStream + static_cast<std::uint64_t>(index),
                                 "train-" + std::to_string(index));
  return run_session(raw).observed;
}

CorpusTrip test_trip(const PipelineConfig& config, int index) {
  auto raw = simulate_trip(config, kTestStream + static_cast<std::uint64_t>(index),
                           "test-" + std::to_string(index));
  const auto n_attacked =
      static_cast<int>(std::lround(config.attacked_fraction * config.test_trips));
  CorpusTrip out;
  out.attacked = config.attack != AttackKind::kNone && index < n_attacked;
  if (out.attacked && config.attack == AttackKind::kFlatten) {
    raw = flatten_trip(raw, {config.flatten_threshold_kmh});
  } else if (out.attacked && config.attack == AttackKind::kReplay) {
    ReplayConfig rc;
    rc.recorded = simulate_trip(config, kReplaySourceStream + static_cast<std::uint64_t>(index),
                                "replay-source-" + std::to_string(index));
    raw = replay_attack(raw, rc);
  }
  out.observed = run_session(raw).observed;
  out.records = preprocess_trip(out.observed, config.preprocess).records;
  return out;
}

Metrics evaluate_report(const DetectionReport& report, const std::vector<AlignedRecord>& records,
                        EventAnalysis* events) {
  if (report.entries.size() != records.size()) {
    throw UsageError("report has " + std::to_string(report.entries.size()) + " entries but data has " +
                     std::to_string(records.size()) + " records");
  }
  std::vector<bool> flags, labels;
  std::vector<double> scores, times;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (report.entries[i].t != records[i].t) {
      throw UsageError("report and data disagree at row " + std::to_string(i + 1) + " (t=" +
                       std::to_string(report.entries[i].t) + " vs " + std::to_string(records[i].t) + ")");
    }
    if (!records[i].label) {
      throw UsageError("record at t=" + std::to_string(records[i].t) + " has no truth label");
    }
    flags.push_back(report.entries[i].flagged);
    labels.push_back(*records[i].label);
    scores.push_back(report.entries[i].range.score);
    times.push_back(static_cast<double>(records[i].t));
  }
  auto metrics = confusion(flags, labels);
  auto roc = roc_from_scores(scores, labels);
  metrics.roc = std::move(roc.roc);
  metrics.auc = roc.auc;
  if (events) *events = group_events(times, flags, labels);
  return metrics;
}

PipelineResult run_pipeline(const PipelineConfig& config, const PipelineLog& log) {
  config.validate();
  const auto seed = require_seed(config);
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };

  std::vector<AlignedRecord> train;
  for (int i = 0; i < config.train_trips; ++i) {
    const auto records = preprocess_trip(training_trip(config, i), config.preprocess).records;
    train.insert(train.end(), records.begin(), records.end());
  }
  say("training corpus: " + std::to_string(config.train_trips) + " trips, " +
      std::to_string(train.size()) + " records");

  PipelineResult result;
  for (int i = 0; i < config.test_trips; ++i) result.test.push_back(test_trip(config, i));
  result.test_records = concat_records(result.test);
  say("test corpus: " + std::to_string(config.test_trips) + " trips, " +
      std::to_string(result.test_records.size()) + " records");

  auto hp = config.hyperparams;
  hp.seed = seed;
  const int report_every = std::max(1, hp.n_iter / 10);
  result.model = fit(train, hp, [&](int iter, int total) {
    if (iter % report_every == 0 || iter == total) {
      say("gibbs sweep " + std::to_string(iter) + "/" + std::to_string(total));
    }
  });
  say("fitted " + std::to_string(result.model.draws.size()) + " posterior draws");

  const PosteriorPredictive predictive(result.model);
  result.report.level = config.level;
  for (std::size_t i = 0; i < result.test.size(); ++i) {
    const auto& records = result.test[i].records;
    auto part = detect_trip(records, predictive, config.level, config.predictive_samples,
                            substream_seed(seed, kDetectStream + i));
    result.report.n_flagged += part.n_flagged;
    result.report.entries.insert(result.report.entries.end(), part.entries.begin(), part.entries.end());
  }
  say("flagged " + std::to_string(result.report.n_flagged) + " of " +
      std::to_string(result.report.entries.size()) + " records");

  result.metrics = evaluate_report(result.report, result.test_records, &result.events);
  return result;
}

void write_pipeline_outputs(const PipelineResult& result, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  save_posterior(result.model, out_dir / "model.json");
  write_report(result.report, out_dir / "report.json");
  write_aligned(result.test_records, out_dir / "test.csv");
  write_file(out_dir / "metrics.json",
             [&](std::ostream& out) { write_metrics(result.metrics, result.events, out); });
  write_file(out_dir / "roc.csv", [&](std::ostream& out) { write_roc_csv(result.metrics.roc, out); });
}

}  // namespace odbguard
