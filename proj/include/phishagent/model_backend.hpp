#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "phishagent/online_knowledge.hpp"

namespace phishagent {

enum class TemplateId { TextBrandExtractor, ImageBrandExtractor, Recheck, TargetBrandChecker };

std::string_view to_string(TemplateId id);

struct PromptTemplate {
  TemplateId id;
  std::string_view system;
  std::string_view body;
  std::vector<std::string_view> placeholders;
};

const PromptTemplate& prompt_template(TemplateId id);

using Substitutions = std::map<std::string, std::string>;

/// Replaces every {placeholder} of the template in one pass. Substituted text
/// is never rescanned. Throws MissingPlaceholder.
std::string render_prompt(TemplateId id, const Substitutions& substitutions);

struct BrandListing {
  std::string name;
  std::vector<std::string> aliases;
};

/// "Name (aka a1, a2); Other"; brands without aliases are listed bare.
std::string serialize_brand_list(const std::vector<BrandListing>& brands);

/// One line per item: "[index]. [netloc]/[title]/[snippet]", 1-based.
std::string serialize_search_items(const std::vector<SearchResultItem>& items);

namespace parsed {
struct BrandName {
  std::string name;
  bool operator==(const BrandName&) const = default;
};
struct NotIdentifiable {
  bool operator==(const NotIdentifiable&) const = default;
};
struct RecheckPair {
  std::optional<std::string> brand;  // empty when the model found no brand
  bool same_old = false;
  bool operator==(const RecheckPair&) const = default;
};
struct Binary01 {
  bool value = false;
  bool operator==(const Binary01&) const = default;
};
}  // namespace parsed

using ParsedResponse = std::variant<parsed::BrandName, parsed::NotIdentifiable, parsed::RecheckPair, parsed::Binary01>;

struct ModelResponse {
  std::string raw_text;
  ParsedResponse parsed;
};

/// Total for TBE, IBE and TBC. Recheck throws UnparseableResponse when
/// neither numbered line is present.
ParsedResponse parse_response(TemplateId id, std::string_view raw);

struct ModelRequest {
  TemplateId template_id = TemplateId::TextBrandExtractor;
  Substitutions substitutions;
  std::optional<std::string> image_ref;
  std::string sample_id;
  double temperature = 0.0;
};

/// A (multimodal) language model. Implementations must be safe for
/// concurrent invoke.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual ModelResponse invoke(const ModelRequest& request) = 0;
};

struct StubScript {
  std::vector<std::string> keyword_table;
  std::map<std::string, std::string> screenshot_labels;  // sample id or screenshot path -> brand
  bool susceptible_to_injection = false;

  static StubScript parse(std::string_view json_text);
  static StubScript load(const std::filesystem::path& path);
  std::string to_json() const;
};

/// Deterministic stand-in for hosted models.
///
/// TBE scans the processed HTML, then the URL, for the earliest keyword-table
/// entry (whole word, case-insensitive). When susceptible it first obeys
/// directives injected into the page ("The official webpage of X",
/// "Brand name is X", "... answer X"). IBE and Recheck read the scripted
/// screenshot label. TBC looks for the brand as a whole word in the
/// serialized items.
class StubBackend : public ModelBackend {
 public:
  explicit StubBackend(StubScript script);

  ModelResponse invoke(const ModelRequest& request) override;
  const StubScript& script() const noexcept { return script_; }

  std::optional<std::string> screenshot_label(const ModelRequest& request) const;

 private:
  std::string text_brand(const ModelRequest& request) const;

  StubScript script_;
};

/// Case-insensitive whole-word containment; the deterministic TBC fallback.
bool brand_mentioned(std::string_view brand, std::string_view serialized_items);

}  // namespace phishagent
