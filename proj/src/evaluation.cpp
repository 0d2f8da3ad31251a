#include "phishagent/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "phishagent/errors.hpp"

namespace phishagent {

namespace {

bool io_stage(const TrailEntry& t) {
  static constexpr std::string_view kIo[] = {"domain_query",          "brand_query",           "recheck_brand_query",
                                             "text_brand_extractor",  "image_brand_extractor", "recheck"};
  for (auto c : kIo) {
    if (t.component == c) return true;
  }
  return t.component.find("target_brand_checker") != std::string::npos && t.decision.rfind("llm", 0) == 0;
}

double nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

}  // namespace

bool MetricsReport::same_counts(const MetricsReport& o) const {
  return tp == o.tp && fp == o.fp && tn == o.tn && fn == o.fn && accuracy == o.accuracy &&
         precision == o.precision && recall == o.recall && f1 == o.f1 &&
         precision_undefined == o.precision_undefined && errors == o.errors;
}

MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  MetricsReport m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  const std::size_t total = tp + fp + tn + fn;
  m.accuracy = total ? d(tp + tn) / d(total) : 0.0;
  m.precision_undefined = tp + fp == 0;
  m.precision = m.precision_undefined ? 0.0 : d(tp) / d(tp + fp);
  m.recall = tp + fn ? d(tp) / d(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

double compute_only_ms(const Verdict& v) {
  double io = 0.0;
  for (const auto& t : v.trail) {
    if (io_stage(t)) io += t.ms;
  }
  return std::max(0.0, v.total_ms - io);
}

MetricsReport compute_metrics(const std::vector<ScoredVerdict>& verdicts) {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::vector<double> times;
  double compute = 0.0;
  for (const auto& [v, gold] : verdicts) {
    if (!gold) throw Error(ErrorKind::UnlabeledSample, "sample '" + v.sample_id + "' has no gold label");
    const bool predicted = v.label == Label::Phishing;
    const bool actual = *gold == Label::Phishing;
    tp += predicted && actual;
    fp += predicted && !actual;
    tn += !predicted && !actual;
    fn += !predicted && actual;
    times.push_back(v.total_ms);
    compute += compute_only_ms(v);
  }
  MetricsReport m = metrics_from_counts(tp, fp, tn, fn);
  if (!times.empty()) {
    double sum = 0.0;
    for (double t : times) sum += t;
    m.mean_ms = sum / static_cast<double>(times.size());
    m.mean_compute_ms = compute / static_cast<double>(times.size());
    m.p95_ms = nearest_rank(times, 0.95);
  }
  return m;
}

EvalResult run_eval(const std::vector<SampleRecord>& manifest, const Detector& detector, std::size_t parallelism) {
  EvalResult result;
  result.flags = detector.config().ablation;
  result.outcomes.resize(manifest.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < manifest.size(); i = next.fetch_add(1)) {
      SampleOutcome& out = result.outcomes[i];
      out.sample_id = manifest[i].sample_id;
      out.gold = manifest[i].label;
      try {
        out.verdict = detector.detect(load_raw_webpage(manifest[i]));
      } catch (const Error& e) {
        out.error = e.what();
      }
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(1, manifest.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }

  std::vector<ScoredVerdict> scored;
  for (const auto& o : result.outcomes) {
    if (o.verdict) scored.push_back({*o.verdict, o.gold});
    else ++result.metrics.errors;
  }
  const std::size_t errors = result.metrics.errors;
  result.metrics = compute_metrics(scored);
  result.metrics.errors = errors;
  return result;
}

nlohmann::json metrics_to_json(const MetricsReport& m, bool include_timings) {
  nlohmann::json j = {{"tp", m.tp},
                      {"fp", m.fp},
                      {"tn", m.tn},
                      {"fn", m.fn},
                      {"accuracy", m.accuracy},
                      {"precision", m.precision},
                      {"precision_undefined", m.precision_undefined},
                      {"recall", m.recall},
                      {"f1", m.f1},
                      {"errors", m.errors}};
  if (include_timings) {
    j["mean_ms"] = m.mean_ms;
    j["p95_ms"] = m.p95_ms;
    j["mean_compute_ms"] = m.mean_compute_ms;
  }
  return j;
}

nlohmann::json eval_report_json(const EvalResult& result, bool include_timings) {
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& o : result.outcomes) {
    if (!o.verdict) errors.push_back({{"sample_id", o.sample_id}, {"error", o.error}});
  }
  return {{"metrics", metrics_to_json(result.metrics, include_timings)},
          {"flags", result.flags.disabled()},
          {"samples", result.outcomes.size()},
          {"errors", std::move(errors)}};
}

std::string verdicts_jsonl(const EvalResult& result, bool include_timings) {
  std::string out;
  for (const auto& o : result.outcomes) {
    nlohmann::json j;
    if (o.verdict) {
      j = verdict_to_json(*o.verdict, include_timings);
    } else {
      j = {{"sample_id", o.sample_id}, {"error", o.error}};
    }
    j["gold"] = o.gold ? nlohmann::json(std::string(to_string(*o.gold))) : nlohmann::json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string format_report_table(const MetricsReport& m) {
  char buf[256];
  std::string out = "  ACC      F1       Precision  Recall   Time(ms)  Compute(ms)  p95(ms)\n";
  std::snprintf(buf, sizeof buf, "  %-8.2f %-8.2f %-10.2f %-8.2f %-9.2f %-12.2f %.2f\n", 100.0 * m.accuracy,
                100.0 * m.f1, 100.0 * m.precision, 100.0 * m.recall, m.mean_ms, m.mean_compute_ms, m.p95_ms);
  out += buf;
  std::snprintf(buf, sizeof buf, "  tp=%zu fp=%zu tn=%zu fn=%zu errors=%zu%s\n", m.tp, m.fp, m.tn, m.fn, m.errors,
                m.precision_undefined ? " (precision undefined: no positive predictions)" : "");
  out += buf;
  return out;
}

std::vector<std::pair<std::size_t, double>> k_sweep(const std::vector<TrainingPair>& validation,
                                                    const BrandIndex& index, const ProjectionHead& head,
                                                    const ModalityWeights& weights, const std::vector<std::size_t>& ks) {
  if (ks.empty()) throw Error(ErrorKind::InvalidArgument, "k sweep needs at least one k");
  if (!std::is_sorted(ks.begin(), ks.end()) || ks.front() == 0) {
    throw Error(ErrorKind::InvalidArgument, "ks must be positive and sorted ascending");
  }
  // Rank of the gold brand among retrieved brands, or npos when absent.
  std::vector<std::size_t> ranks;
  ranks.reserve(validation.size());
  const std::size_t k_max = ks.back();
  for (const auto& pair : validation) {
    const auto query = encode_webpage(pair.webpage, head, weights);
    const auto hits = index.retrieve_top_k(query, k_max);
    std::size_t rank = std::string::npos;
    for (std::size_t r = 0; r < hits.size(); ++r) {
      if (hits[r].brand_id == pair.positive.brand_id) {
        rank = r;
        break;
      }
    }
    ranks.push_back(rank);
  }
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t k : ks) {
    std::size_t hit = 0;
    for (std::size_t r : ranks) hit += r != std::string::npos && r < k;
    out.emplace_back(k, validation.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(validation.size()));
  }
  return out;
}

}  // namespace phishagent
