#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "phishagent/embedding_math.hpp"
#include "phishagent/knowledge_base.hpp"
#include "phishagent/model_backend.hpp"
#include "phishagent/online_knowledge.hpp"
#include "phishagent/preprocess.hpp"
#include "phishagent/records.hpp"
#include "phishagent/retriever.hpp"

namespace phishagent {

enum class DecidedBy { DomainChecker, TargetBrandChecker, MbeNotIdentifiable, Recheck, FinalRule };

std::string_view to_string(DecidedBy d);
DecidedBy parse_decided_by(std::string_view s);

enum class TbcMode { Llm, Deterministic };

/// Pipeline components that can be switched off for ablation runs.
struct AblationFlags {
  bool offline = false;
  bool online = false;
  bool domain_query = false;
  bool brand_query = false;
  bool recheck = false;
  bool tbe = false;
  bool ibe = false;

  /// Rejects disabling both brand extractors.
  void validate() const;
  /// Sets the flag named by one of: offline, online, domain-query,
  /// brand-query, recheck, tbe, ibe.
  void disable(std::string_view component);
  std::vector<std::string> disabled() const;

  bool operator==(const AblationFlags&) const = default;
};

struct DetectorConfig {
  std::size_t top_k = kDefaultTopK;
  std::size_t search_k = kDefaultSearchK;
  TbcMode tbc_mode = TbcMode::Llm;
  // Compare hosts with one leading "www." stripped on either side.
  bool www_normalization = true;
  AblationFlags ablation;
};

/// Non-owning handles to everything a detection needs. Pointers may be null
/// only for components the ablation flags switch off.
struct DetectorDeps {
  const BrandKnowledgeBase* bkb = nullptr;
  const BrandIndex* index = nullptr;
  ProjectionHead head;
  ModalityWeights weights;
  SearchClient* search = nullptr;
  ModelBackend* llm = nullptr;
  ModelBackend* mllm = nullptr;
};

struct TrailEntry {
  std::string component;
  std::string decision;
  double ms = 0.0;

  bool operator==(const TrailEntry&) const = default;
};

struct Verdict {
  std::string sample_id;
  Label label = Label::Benign;
  std::optional<std::string> target_brand;
  DecidedBy decided_by = DecidedBy::FinalRule;
  std::vector<TrailEntry> trail;
  double total_ms = 0.0;

  /// Equality of everything except timings.
  bool same_decision(const Verdict& other) const;
};

nlohmann::json verdict_to_json(const Verdict& v, bool include_timings = true);
Verdict verdict_from_json(const nlohmann::json& j);

/// Number of search engine queries recorded in the trail.
std::size_t search_calls(const Verdict& v);
/// Number of LLM/MLLM invocations recorded in the trail.
std::size_t model_calls(const Verdict& v);

struct OfflineBrand {
  RetrievalHit hit;
  const Brand* brand = nullptr;
};

struct DetectionContext {
  ProcessedWebpage page;
  std::vector<OfflineBrand> r_offl;
  std::vector<SearchResultItem> r_domain;
  std::vector<SearchResultItem> r_onl;
  std::set<std::string> d_comb;
  std::optional<std::string> target_brand;
  std::vector<TrailEntry> trail;
};

struct BrandExtraction {
  std::optional<std::string> brand;  // empty: not identifiable
  bool used_ibe = false;
};

std::vector<BrandListing> offline_listings(const std::vector<OfflineBrand>& r_offl);

/// Domain Checker: membership of `domain` in `domains`, optionally after
/// stripping one leading "www." on either side.
bool check_domain(std::string_view domain, const std::set<std::string>& domains, bool www_normalization = true);

/// Deterministic Target Brand Checker: whole-word, case-insensitive mention of
/// the brand in any offline name/alias or any online domain/title/snippet.
bool brand_in_knowledge(std::string_view brand, const std::vector<SearchResultItem>& r_onl,
                        const std::vector<OfflineBrand>& r_offl);

class Detector {
 public:
  Detector(DetectorDeps deps, DetectorConfig config);

  /// Classifies one webpage; reentrant. Stage failures are rethrown with the
  /// stage name prefixed and the original error kind kept.
  Verdict detect(const RawWebpage& raw) const;

  /// Text-based then image-based brand extraction.
  BrandExtraction extract_brand(DetectionContext& ctx) const;

  bool check_target_brand(std::string_view brand, const std::vector<SearchResultItem>& r_onl,
                          const std::vector<OfflineBrand>& r_offl, std::vector<TrailEntry>& trail,
                          std::string_view component = "target_brand_checker") const;

  const DetectorConfig& config() const noexcept { return config_; }

 private:
  std::vector<SearchResultItem> search(DetectionContext& ctx, std::string_view component, const std::string& q) const;
  Verdict recheck(DetectionContext& ctx, const std::string& old_brand) const;

  DetectorDeps deps_;
  DetectorConfig config_;
  std::set<std::string> bkb_domains_;
};

}  // namespace phishagent
