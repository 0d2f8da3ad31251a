#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "phishagent/agent_core.hpp"
#include "phishagent/records.hpp"
#include "phishagent/retriever.hpp"
#include "phishagent/trainer.hpp"

namespace phishagent {

struct MetricsReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when no sample was predicted Phishing; precision is then reported as 0.
  bool precision_undefined = false;
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  // Mean of total time minus time spent in search and model calls.
  double mean_compute_ms = 0.0;
  std::size_t errors = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  /// Field-wise equality ignoring the timing fields.
  bool same_counts(const MetricsReport& other) const;
};

struct ScoredVerdict {
  Verdict verdict;
  std::optional<Label> gold;
};

/// Throws UnlabeledSample when any gold label is missing.
MetricsReport compute_metrics(const std::vector<ScoredVerdict>& verdicts);

/// Derived metrics from confusion counts alone; timings stay zero.
MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);

/// Milliseconds spent outside search and model calls.
double compute_only_ms(const Verdict& v);

struct SampleOutcome {
  std::string sample_id;
  std::optional<Verdict> verdict;
  std::optional<Label> gold;
  std::string error;  // set when verdict is empty
};

struct EvalResult {
  MetricsReport metrics;
  std::vector<SampleOutcome> outcomes;  // manifest order
  AblationFlags flags;
};

/// Runs the detector over every sample with up to `parallelism` workers.
/// Failures are recorded per sample and excluded from the metrics.
EvalResult run_eval(const std::vector<SampleRecord>& manifest, const Detector& detector, std::size_t parallelism);

nlohmann::json metrics_to_json(const MetricsReport& m, bool include_timings = true);
nlohmann::json eval_report_json(const EvalResult& result, bool include_timings = true);
/// One JSON object per line; errored samples carry an "error" field.
std::string verdicts_jsonl(const EvalResult& result, bool include_timings = true);
/// Plain-text table: ACC, F1, Precision, Recall (as percentages) and Time.
std::string format_report_table(const MetricsReport& m);

/// recall@k for each k over the validation pairs, using one retrieval per pair
/// at the largest k. Throws InvalidArgument on an empty or unsorted ks.
std::vector<std::pair<std::size_t, double>> k_sweep(const std::vector<TrainingPair>& validation,
                                                    const BrandIndex& index, const ProjectionHead& head,
                                                    const ModalityWeights& weights, const std::vector<std::size_t>& ks);

}  // namespace phishagent
