#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "odbguard/detect.hpp"
#include "odbguard/eval.hpp"
#include "odbguard/model.hpp"
#include "odbguard/preprocess.hpp"
#include "odbguard/trace.hpp"
#include "odbguard/vehsim.hpp"

namespace odbguard {

enum class AttackKind { kNone, kFlatten, kReplay };

const char* to_string(AttackKind kind);
AttackKind parse_attack_kind(const std::string& name);

struct PipelineConfig {
  HyperParams hyperparams;
  PreprocessConfig preprocess;
  MixedDriveOptions drive;
  int train_trips = 10;
  int test_trips = 30;
  double attacked_fraction = 0.5;
  AttackKind attack = AttackKind::kFlatten;
  int flatten_threshold_kmh = 11;
  double level = 0.95;
  std::size_t predictive_samples = 2000;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = "out";

  void validate() const;
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);
void save_pipeline_config(const PipelineConfig& config, const std::filesystem::path& path);

/// One simulated, attacked (or not) and dongle-observed test trip.
struct CorpusTrip {
  RawTrip observed;
  bool attacked = false;
  std::vector<AlignedRecord> records;
};

struct PipelineResult {
  PosteriorSamples model;
  std::vector<CorpusTrip> test;
  std::vector<AlignedRecord> test_records;  ///< all test trips, concatenated
  DetectionReport report;                   ///< one entry per test record
  Metrics metrics;                          ///< point confusion plus ROC
  EventAnalysis events;
};

using PipelineLog = std::function<void(const std::string&)>;

/// Clean training trip `index` as seen by the dongle. Requires config.seed.
RawTrip training_trip(const PipelineConfig& config, int index);
/// Test trip `index`, attacked when index < attacked_fraction * test_trips.
CorpusTrip test_trip(const PipelineConfig& config, int index);

/// Point metrics, ROC and events for a report against labelled records.
Metrics evaluate_report(const DetectionReport& report, const std::vector<AlignedRecord>& records,
                        EventAnalysis* events = nullptr);

/// simulate -> attack -> session -> preprocess -> fit -> detect -> eval.
/// The fit uses config.seed, overriding hyperparams.seed.
PipelineResult run_pipeline(const PipelineConfig& config, const PipelineLog& log = {});

/// Writes model.json, report.json, metrics.json, roc.csv and test.csv into
/// config.out_dir.
void write_pipeline_outputs(const PipelineResult& result, const std::filesystem::path& out_dir);

}  // namespace odbguard
