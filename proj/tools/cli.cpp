#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "phishagent/adversarial.hpp"
#include "phishagent/agent_core.hpp"
#include "phishagent/errors.hpp"
#include "phishagent/evaluation.hpp"
#include "phishagent/http_clients.hpp"
#include "phishagent/knowledge_base.hpp"
#include "phishagent/preprocess.hpp"
#include "phishagent/records.hpp"
#include "phishagent/retriever.hpp"
#include "phishagent/text_util.hpp"
#include "phishagent/trainer.hpp"

namespace phishagent::cli {

namespace {

using nlohmann::json;

// Flag combinations CLI11 cannot express on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit_json(const json& j, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << j.dump(2) << '\n';
  } else {
    write_text_file(out_path, j.dump(2) + "\n");
  }
}

ModalityWeights parse_weights(const std::vector<double>& w) {
  ModalityWeights m;
  if (w.empty()) return m;
  if (w.size() != 4) throw UsageError("--weights takes four values: webpage text, webpage image, brand text, brand image");
  m.webpage_text = w[0];
  m.webpage_image = w[1];
  m.brand_text = w[2];
  m.brand_image = w[3];
  return m;
}

ProjectionHead head_for(const std::string& checkpoint, std::size_t dim) {
  if (checkpoint.empty()) return ProjectionHead::identity(dim);
  auto ck = load_checkpoint(checkpoint);
  if (ck.head.dim() != dim) {
    throw Error(ErrorKind::DimensionMismatch, "checkpoint dimension " + std::to_string(ck.head.dim()) +
                                                  " does not match BKB dimension " + std::to_string(dim));
  }
  return ck.head;
}

// ---------------------------------------------------------------- detector

struct DetectorOptions {
  std::string bkb;
  std::string embeddings;
  std::string checkpoint;
  std::string fixtures;
  std::string search_endpoint;
  std::string search_api_key;
  std::string search_engine_id;
  std::string llm_backend = "stub";
  std::string mllm_backend;
  std::string stub_script;
  std::string model_endpoint;
  std::string model_api_key;
  std::string model_name = "gpt-4o";
  std::size_t max_in_flight = 4;
  std::string tbc_mode = "llm";
  std::vector<std::string> ablate;
  std::size_t top_k = kDefaultTopK;
  std::size_t search_k = kDefaultSearchK;
  bool no_www_normalization = false;
  std::vector<double> weights;
};

void add_detector_options(CLI::App* sub, DetectorOptions& o) {
  sub->add_option("--bkb", o.bkb, "Brand knowledge base (JSON Lines)")->required();
  sub->add_option("--embeddings", o.embeddings, "Brand alias text embeddings (JSON Lines)")->required();
  sub->add_option("--checkpoint", o.checkpoint, "Trained projection head; identity when omitted");
  sub->add_option("--fixtures", o.fixtures, "Recorded search results (JSON)");
  sub->add_option("--search-endpoint", o.search_endpoint, "Live search API endpoint");
  sub->add_option("--search-api-key", o.search_api_key, "Search API key")->envname("SEARCH_API_KEY");
  sub->add_option("--search-engine-id", o.search_engine_id, "Search engine id (cx)");
  sub->add_option("--llm-backend", o.llm_backend, "Text model backend")
      ->check(CLI::IsMember({"stub", "http"}))
      ->capture_default_str();
  sub->add_option("--mllm-backend", o.mllm_backend, "Multimodal backend; defaults to --llm-backend")
      ->check(CLI::IsMember({"stub", "http"}));
  sub->add_option("--stub-script", o.stub_script, "Stub backend script (JSON)");
  sub->add_option("--model-endpoint", o.model_endpoint, "Chat completions endpoint")->envname("MODEL_ENDPOINT");
  sub->add_option("--model-api-key", o.model_api_key, "Model API key")->envname("MODEL_API_KEY");
  sub->add_option("--model", o.model_name, "Hosted model name")->capture_default_str();
  sub->add_option("--max-in-flight", o.max_in_flight, "Concurrent requests per HTTP model backend")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--tbc-mode", o.tbc_mode, "Target brand checker")
      ->check(CLI::IsMember({"llm", "deterministic"}))
      ->capture_default_str();
  sub->add_option("--ablate", o.ablate, "Disable a component: offline|online|domain-query|brand-query|recheck|tbe|ibe");
  sub->add_option("--top-k", o.top_k, "Brands retrieved from the knowledge base")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--search-k", o.search_k, "Results per search query")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_flag("--no-www-normalization", o.no_www_normalization, "Compare hosts without stripping www.");
  sub->add_option("--weights", o.weights, "Modality weights: webpage-text webpage-image brand-text brand-image")
      ->expected(4)
      ->delimiter(',');
}

// Owns everything a Detector points at.
struct DetectorBundle {
  BrandKnowledgeBase bkb;
  AliasEmbeddings alias;
  BrandIndex index;
  std::unique_ptr<SearchClient> search;
  std::unique_ptr<ModelBackend> llm;
  std::unique_ptr<ModelBackend> mllm;
  std::unique_ptr<Detector> detector;
};

std::unique_ptr<ModelBackend> make_backend(const std::string& kind, const DetectorOptions& o) {
  if (kind == "stub") {
    return std::make_unique<StubBackend>(o.stub_script.empty() ? StubScript{} : StubScript::load(o.stub_script));
  }
  if (o.model_endpoint.empty()) throw UsageError("http backend needs --model-endpoint or MODEL_ENDPOINT");
  HttpModelConfig cfg;
  cfg.endpoint = o.model_endpoint;
  cfg.api_key = o.model_api_key;
  cfg.model = o.model_name;
  cfg.max_in_flight = o.max_in_flight;
  return std::make_unique<HttpModelBackend>(cfg);
}

std::unique_ptr<DetectorBundle> build_detector(const DetectorOptions& o) {
  DetectorConfig cfg;
  cfg.top_k = o.top_k;
  cfg.search_k = o.search_k;
  cfg.tbc_mode = o.tbc_mode == "deterministic" ? TbcMode::Deterministic : TbcMode::Llm;
  cfg.www_normalization = !o.no_www_normalization;
  try {
    for (const auto& a : o.ablate) cfg.ablation.disable(a);
    cfg.ablation.validate();
  } catch (const Error& e) {
    throw UsageError(e.detail());
  }

  auto b = std::make_unique<DetectorBundle>();
  b->bkb = load_bkb(o.bkb);
  b->alias = load_alias_embeddings(o.embeddings);
  const auto weights = parse_weights(o.weights);
  const auto head = head_for(o.checkpoint, b->bkb.dimension());
  if (!cfg.ablation.offline) b->index = BrandIndex::build(b->bkb, b->alias, head, weights, cfg.top_k);

  if (!cfg.ablation.online) {
    if (!o.fixtures.empty() && !o.search_endpoint.empty()) {
      throw UsageError("--fixtures and --search-endpoint are mutually exclusive");
    }
    if (!o.fixtures.empty()) {
      b->search = std::make_unique<FixtureClient>(FixtureStore::load(o.fixtures));
    } else if (!o.search_endpoint.empty()) {
      b->search = std::make_unique<HttpSearchClient>(
          HttpSearchConfig{o.search_endpoint, o.search_api_key, o.search_engine_id, std::chrono::seconds(30)});
    } else {
      throw UsageError("the online module needs --fixtures or --search-endpoint (or --ablate online)");
    }
  }
  b->llm = make_backend(o.llm_backend, o);
  b->mllm = make_backend(o.mllm_backend.empty() ? o.llm_backend : o.mllm_backend, o);

  DetectorDeps deps;
  deps.bkb = &b->bkb;
  deps.index = cfg.ablation.offline ? nullptr : &b->index;
  deps.head = head;
  deps.weights = weights;
  deps.search = b->search.get();
  deps.llm = b->llm.get();
  deps.mllm = b->mllm.get();
  b->detector = std::make_unique<Detector>(deps, cfg);
  return b;
}

std::string verdict_line(const Verdict& v) {
  std::string line = v.sample_id + ": " + std::string(to_string(v.label));
  if (v.target_brand) line += " (target " + *v.target_brand + ")";
  line += " decided by " + std::string(to_string(v.decided_by));
  line += ", " + std::to_string(search_calls(v)) + " search queries";
  return line;
}

// ---------------------------------------------------------------- commands

struct IngestOptions {
  std::string in;
  std::string embeddings;
  std::string out;
};

int run_ingest(const IngestOptions& o, std::ostream& out) {
  const auto bkb = load_bkb(o.in);
  std::size_t variants = 0;
  for (const auto& b : bkb.brands()) variants += indexed_variants(b).size();
  json summary = {{"brands", bkb.size()},
                  {"dimension", bkb.dimension()},
                  {"domains", bkb.all_known_domains().size()},
                  {"index_entries", variants}};
  if (!o.embeddings.empty()) {
    const auto alias = load_alias_embeddings(o.embeddings);
    for (const auto& b : bkb.brands()) {
      const auto it = alias.find(b.id);
      if (it == alias.end()) throw Error(ErrorKind::Parse, "no alias embedding for brand '" + b.id + "'");
      if (it->second.size() != bkb.dimension()) {
        throw Error(ErrorKind::DimensionMismatch, "alias embedding for '" + b.id + "' has the wrong dimension");
      }
    }
    summary["alias_embeddings"] = alias.size();
  }
  if (!o.out.empty()) save_bkb(o.out, bkb);
  out << "ingested " << bkb.size() << " brands, " << variants << " index entries, dimension " << bkb.dimension()
      << '\n';
  if (o.out.empty()) out << summary.dump(2) << '\n';
  return kOk;
}

struct TrainOptions {
  std::string bkb;
  std::string embeddings;
  std::string labels;
  std::string out;
  std::string init_checkpoint;
  std::string report;
  TrainerConfig cfg;
  std::string optimizer = "adam";
  std::vector<double> weights;
};

json training_report_json(const TrainingSetReport& r) {
  return {{"labeled", r.labeled},   {"no_match", r.no_match}, {"ambiguous", r.ambiguous},
          {"grounded", r.grounded}, {"expanded", r.expanded}, {"total", r.total},
          {"train", r.train},       {"validation", r.validation}};
}

int run_train(TrainOptions o, std::ostream& out) {
  o.cfg.optimizer = o.optimizer == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
  o.cfg.weights = parse_weights(o.weights);
  try {
    o.cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.detail());
  }
  const auto bkb = load_bkb(o.bkb);
  const auto alias = load_alias_embeddings(o.embeddings);
  const auto labeled = load_labeled_webpages(o.labels);
  const auto set = build_training_set(bkb, labeled, o.cfg);
  std::optional<ProjectionHead> init;
  if (!o.init_checkpoint.empty()) init = head_for(o.init_checkpoint, bkb.dimension());
  const auto result = train(set.train, set.validation, bkb, alias, o.cfg, init);
  save_checkpoint(o.out, result.best);

  json history = json::array();
  for (const auto& h : result.history) {
    history.push_back({{"epoch", h.epoch}, {"mean_loss", h.mean_loss}, {"validation_recall_at_1", h.validation_recall_at_1}});
  }
  json report = {{"training_set", training_report_json(set.report)},
                 {"initial_validation_recall_at_1", result.initial_validation_recall_at_1},
                 {"best_epoch", result.best.epoch},
                 {"best_validation_recall_at_1", result.best.validation_recall_at_1},
                 {"config_hash", result.best.config_hash},
                 {"history", std::move(history)}};
  if (!o.report.empty()) write_text_file(o.report, report.dump(2) + "\n");

  out << "pairs: " << set.report.train << " train, " << set.report.validation << " validation ("
      << set.report.no_match << " unmatched, " << set.report.ambiguous << " ambiguous labels dropped)\n";
  out << "validation recall@1: " << result.initial_validation_recall_at_1 << " -> "
      << result.best.validation_recall_at_1 << " (best epoch " << result.best.epoch << ")\n";
  out << "checkpoint written to " << o.out << '\n';
  return kOk;
}

struct DetectOptions {
  DetectorOptions det;
  std::string sample;
  std::string out;
  bool no_timings = false;
};

int run_detect(const DetectOptions& o, std::ostream& out) {
  auto bundle = build_detector(o.det);
  const auto record = load_sample(o.sample);
  const auto v = bundle->detector->detect(load_raw_webpage(record));
  out << verdict_line(v) << '\n';
  emit_json(verdict_to_json(v, !o.no_timings), o.out, out);
  return kOk;
}

struct EvalOptions {
  DetectorOptions det;
  std::string manifest;
  std::size_t parallelism = 1;
  std::string out;
  std::string verdicts;
  bool no_timings = false;
};

int run_eval_cmd(const EvalOptions& o, std::ostream& out) {
  auto bundle = build_detector(o.det);
  const auto manifest = load_manifest(o.manifest);
  const auto result = run_eval(manifest, *bundle->detector, o.parallelism);
  out << format_report_table(result.metrics);
  const auto flags = result.flags.disabled();
  if (!flags.empty()) {
    out << "  ablated:";
    for (const auto& f : flags) out << ' ' << f;
    out << '\n';
  }
  if (!o.verdicts.empty()) write_text_file(o.verdicts, verdicts_jsonl(result, !o.no_timings));
  emit_json(eval_report_json(result, !o.no_timings), o.out, out);
  return kOk;
}

struct AttackOptions {
  std::string kind;
  std::string payload;
  std::uint64_t seed = 0;
  std::string in;
  std::string out;
  std::string homoglyphs;
  bool all_samples = false;
};

int run_attack(const AttackOptions& o, std::ostream& out, std::ostream& err) {
  AttackSpec spec;
  try {
    spec.kind = parse_attack_kind(o.kind);
  } catch (const Error& e) {
    throw UsageError(e.detail());
  }
  spec.payload = o.payload;
  spec.seed = o.seed;
  const auto table = o.homoglyphs.empty() ? HomoglyphTable::default_table() : HomoglyphTable::load(o.homoglyphs);

  auto records = load_manifest(o.in);
  const std::filesystem::path out_path(o.out);
  const auto out_dir = out_path.has_parent_path() ? out_path.parent_path() : std::filesystem::path(".");
  const std::string html_dir = "html-" + std::string(to_string(spec.kind));
  std::size_t attacked = 0;
  for (auto& r : records) {
    if (!o.all_samples && r.label != Label::Phishing) {
      // Keep pointing at the original file from the new manifest location.
      r.html_path = std::filesystem::absolute(r.resolved_html_path()).string();
      if (auto s = r.resolved_screenshot_path()) r.screenshot_path = std::filesystem::absolute(*s).string();
      r.base_dir = out_dir;
      continue;
    }
    std::vector<std::string> warnings;
    const auto html = apply_attack(read_text_file(r.resolved_html_path()), spec, table, &warnings);
    for (const auto& w : warnings) err << "warning: " << r.sample_id << ": " << w << '\n';
    const std::string rel = html_dir + "/" + r.sample_id + ".html";
    write_text_file(out_dir / rel, html);
    if (auto s = r.resolved_screenshot_path()) r.screenshot_path = std::filesystem::absolute(*s).string();
    r.html_path = rel;
    r.base_dir = out_dir;
    // The stored embedding describes the clean page; drop the hash that would
    // reject it against the attacked text.
    r.text_hash.reset();
    ++attacked;
  }
  save_manifest(out_path, records);
  out << "attack " << to_string(spec.kind) << ": " << attacked << " of " << records.size()
      << " samples rewritten, manifest " << o.out << '\n';
  return kOk;
}

struct SweepOptions {
  std::string bkb;
  std::string embeddings;
  std::string labels;
  std::string checkpoint;
  std::vector<std::size_t> ks{1, 2, 3, 5, 10, 50};
  std::uint64_t seed = 0;
  double split_ratio = 0.9;
  std::size_t negatives = 111;
  bool all_pairs = false;
  std::vector<double> weights;
  std::string out;
};

int run_sweep(const SweepOptions& o, std::ostream& out) {
  auto ks = o.ks;
  if (!std::is_sorted(ks.begin(), ks.end())) throw UsageError("--ks must be sorted ascending");
  const auto bkb = load_bkb(o.bkb);
  const auto alias = load_alias_embeddings(o.embeddings);
  const auto labeled = load_labeled_webpages(o.labels);
  TrainerConfig cfg;
  cfg.seed = o.seed;
  cfg.split_ratio = o.split_ratio;
  cfg.negatives = o.negatives;
  cfg.weights = parse_weights(o.weights);
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.detail());
  }
  auto set = build_training_set(bkb, labeled, cfg);
  auto pairs = set.validation;
  if (o.all_pairs) pairs.insert(pairs.end(), set.train.begin(), set.train.end());
  const auto head = head_for(o.checkpoint, bkb.dimension());
  const auto index = BrandIndex::build(bkb, alias, head, cfg.weights);
  const auto sweep = k_sweep(pairs, index, head, cfg.weights, ks);

  json rows = json::array();
  for (const auto& [k, r] : sweep) {
    rows.push_back({{"k", k}, {"recall", r}});
    out << "recall@" << k << " = " << r << '\n';
  }
  emit_json({{"pairs", pairs.size()}, {"sweep", std::move(rows)}}, o.out, out);
  return kOk;
}

struct FetchOptions {
  std::string url;
  std::string out_dir;
  std::string sample_id;
};

int run_fetch(const FetchOptions& o, std::ostream& out) {
  const std::string id = o.sample_id.empty() ? extract_domain(o.url) : o.sample_id;
  const auto html = http_get(o.url, std::chrono::seconds(30));
  const std::filesystem::path dir(o.out_dir);
  write_text_file(dir / (id + ".html"), html);
  SampleRecord r;
  r.sample_id = id;
  r.url = o.url;
  r.html_path = id + ".html";
  r.text_hash = processed_text_hash(strip_html_to_text(html));
  write_text_file(dir / (id + ".json"), sample_to_json(r).dump(2) + "\n");
  out << "fetched " << html.size() << " bytes; sample skeleton " << (dir / (id + ".json")).string()
      << " (no embeddings, screenshot or logos)\n";
  return kOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reference-based phishing webpage detector", "phishagent"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file mirroring the command-line flags");

  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest-bkb", "Validate a brand knowledge base and write it canonically");
  ingest_cmd->add_option("--in", ingest.in, "Input BKB (JSON Lines)")->required();
  ingest_cmd->add_option("--embeddings", ingest.embeddings, "Alias embeddings to check against the BKB");
  ingest_cmd->add_option("--out", ingest.out, "Canonical BKB output");

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train-retriever", "Train the retriever projection head");
  train_cmd->add_option("--bkb", tr.bkb, "Brand knowledge base")->required();
  train_cmd->add_option("--embeddings", tr.embeddings, "Brand alias text embeddings")->required();
  train_cmd->add_option("--labels", tr.labels, "Labeled webpages (JSON Lines)")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint output")->required();
  train_cmd->add_option("--init-checkpoint", tr.init_checkpoint, "Start from this head instead of identity");
  train_cmd->add_option("--report", tr.report, "Training report (JSON)");
  train_cmd->add_option("--seed", tr.cfg.seed, "RNG seed")->capture_default_str();
  train_cmd->add_option("--epochs", tr.cfg.epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--batch-size", tr.cfg.batch_size, "Pairs per batch")->capture_default_str();
  train_cmd->add_option("--lr", tr.cfg.learning_rate, "Learning rate")->capture_default_str();
  train_cmd->add_option("--negatives", tr.cfg.negatives, "Negatives per pair")->capture_default_str();
  train_cmd->add_option("--negative-rounds", tr.cfg.negative_rounds, "Negative sets drawn per pair")
      ->capture_default_str();
  train_cmd->add_option("--split", tr.cfg.split_ratio, "Training share of the pairs")->capture_default_str();
  train_cmd->add_option("--optimizer", tr.optimizer, "adam or sgd")
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
  train_cmd->add_option("--weights", tr.weights, "Modality weights: webpage-text webpage-image brand-text brand-image")
      ->expected(4)
      ->delimiter(',');

  DetectOptions det;
  auto* detect_cmd = app.add_subcommand("detect", "Classify one stored webpage");
  add_detector_options(detect_cmd, det.det);
  detect_cmd->add_option("--sample", det.sample, "Sample record (JSON)")->required();
  detect_cmd->add_option("--out", det.out, "Verdict output (JSON); standard output when omitted");
  detect_cmd->add_flag("--no-timings", det.no_timings, "Omit timing fields from the verdict");

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a labeled manifest");
  add_detector_options(eval_cmd, ev.det);
  eval_cmd->add_option("--manifest", ev.manifest, "Sample manifest (JSON Lines)")->required();
  eval_cmd->add_option("--parallelism", ev.parallelism, "Concurrent detections")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval_cmd->add_option("--out", ev.out, "Report output (JSON); standard output when omitted");
  eval_cmd->add_option("--verdicts", ev.verdicts, "Per-sample verdicts (JSON Lines)");
  eval_cmd->add_flag("--no-timings", ev.no_timings, "Omit timing fields from the outputs");

  AttackOptions at;
  auto* attack_cmd = app.add_subcommand("attack", "Write an adversarial copy of a manifest");
  attack_cmd->add_option("--kind", at.kind, "spoof|obfuscate|typosquat-title|typosquat-full")
      ->required()
      ->check(CLI::IsMember({"spoof", "obfuscate", "typosquat-title", "typosquat-full"}));
  attack_cmd->add_option("--payload", at.payload, "Injected text for spoof/obfuscate");
  attack_cmd->add_option("--seed", at.seed, "Typosquat RNG seed")->capture_default_str();
  attack_cmd->add_option("--in", at.in, "Input manifest")->required();
  attack_cmd->add_option("--out", at.out, "Output manifest; attacked HTML goes next to it")->required();
  attack_cmd->add_option("--homoglyphs", at.homoglyphs, "Homoglyph table (JSON)");
  attack_cmd->add_flag("--all-samples", at.all_samples, "Attack benign samples too");

  SweepOptions sw;
  auto* sweep_cmd = app.add_subcommand("k-sweep", "Retriever recall@k over the validation split");
  sweep_cmd->add_option("--bkb", sw.bkb, "Brand knowledge base")->required();
  sweep_cmd->add_option("--embeddings", sw.embeddings, "Brand alias text embeddings")->required();
  sweep_cmd->add_option("--labels", sw.labels, "Labeled webpages (JSON Lines)")->required();
  sweep_cmd->add_option("--checkpoint", sw.checkpoint, "Projection head; identity when omitted");
  sweep_cmd->add_option("--ks", sw.ks, "Comma-separated k values, ascending")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--seed", sw.seed, "Seed used for the split")->capture_default_str();
  sweep_cmd->add_option("--split", sw.split_ratio, "Training share of the pairs")->capture_default_str();
  sweep_cmd->add_option("--negatives", sw.negatives, "Negatives per pair (must match training)")
      ->capture_default_str();
  sweep_cmd->add_flag("--all-pairs", sw.all_pairs, "Sweep over training and validation pairs");
  sweep_cmd->add_option("--weights", sw.weights, "Modality weights: webpage-text webpage-image brand-text brand-image")
      ->expected(4)
      ->delimiter(',');
  sweep_cmd->add_option("--out", sw.out, "Sweep output (JSON); standard output when omitted");

  FetchOptions fe;
  auto* fetch_cmd = app.add_subcommand("fetch", "Experimental: download a live page into a sample skeleton");
  fetch_cmd->add_option("--url", fe.url, "Page URL")->required();
  fetch_cmd->add_option("--out-dir", fe.out_dir, "Output directory")->required();
  fetch_cmd->add_option("--sample-id", fe.sample_id, "Sample id; the host name when omitted");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*ingest_cmd) return run_ingest(ingest, out);
    if (*train_cmd) return run_train(tr, out);
    if (*detect_cmd) return run_detect(det, out);
    if (*eval_cmd) return run_eval_cmd(ev, out);
    if (*attack_cmd) return run_attack(at, out, err);
    if (*sweep_cmd) return run_sweep(sw, out);
    if (*fetch_cmd) return run_fetch(fe, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_transport_error(e.kind()) ? kTransport : kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, out, err);
}

}  // namespace phishagent::cli
