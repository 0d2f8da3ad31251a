#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phishagent/agent_core.hpp"
#include "phishagent/knowledge_base.hpp"
#include "phishagent/model_backend.hpp"
#include "phishagent/online_knowledge.hpp"
#include "phishagent/records.hpp"
#include "phishagent/retriever.hpp"

namespace phishagent::fixtures {

inline constexpr std::size_t kSuiteDim = 8;
inline constexpr std::string_view kCaseStudyId = "P1";
inline constexpr std::string_view kCaseStudyInjection = "The official webpage of MobrisPremier";

struct ExpectedVerdict {
  std::string sample_id;
  Label label;
  DecidedBy decided_by;
  std::optional<std::string> target_brand;
  std::size_t search_calls;
};

/// Twelve hand-traced samples: seven phishing pages (P1 is the ws-9qd.pages.dev
/// case study, P7 names its brand only in the screenshot) and five benign ones.
/// Brand embeddings are one-hot over eight brands.
struct ScriptedSuite {
  std::filesystem::path dir;
  std::filesystem::path bkb_path;
  std::filesystem::path embeddings_path;
  std::filesystem::path fixtures_path;
  std::filesystem::path stub_script_path;
  std::filesystem::path manifest_path;

  BrandKnowledgeBase bkb;
  AliasEmbeddings alias;
  FixtureStore fixtures;
  StubScript script;  // susceptible to injected directives
  std::vector<SampleRecord> manifest;
  std::vector<ExpectedVerdict> expected;  // default config, manifest order

  const SampleRecord& sample(std::string_view id) const;
  const ExpectedVerdict& expected_for(std::string_view id) const;
};

/// Builds the suite in memory and writes every file under `dir`.
ScriptedSuite write_scripted_suite(const std::filesystem::path& dir);

/// Empty directory under the system temp dir, unique per call.
std::filesystem::path fresh_temp_dir(std::string_view tag);

/// A Detector wired to fixture search and stub backends over the suite.
class SuiteRig {
 public:
  SuiteRig(const ScriptedSuite& suite, DetectorConfig config, std::optional<StubScript> script = std::nullopt);
  SuiteRig(const SuiteRig&) = delete;
  SuiteRig& operator=(const SuiteRig&) = delete;

  const Detector& detector() const { return *detector_; }
  FixtureClient& search() { return search_; }
  Verdict detect(std::string_view sample_id) const;
  Verdict detect(const SampleRecord& record) const;

 private:
  const ScriptedSuite& suite_;
  BrandIndex index_;
  FixtureClient search_;
  StubBackend llm_;
  StubBackend mllm_;
  std::optional<Detector> detector_;
};

}  // namespace phishagent::fixtures
