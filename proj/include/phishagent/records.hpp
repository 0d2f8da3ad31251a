#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "phishagent/preprocess.hpp"
#include "phishagent/trainer.hpp"

namespace phishagent {

enum class Label { Benign, Phishing };

std::string_view to_string(Label label);
Label parse_label(std::string_view s);

/// One line of a sample manifest. Relative paths resolve against `base_dir`,
/// the directory of the manifest file.
struct SampleRecord {
  std::string sample_id;
  std::string url;
  std::string html_path;
  std::optional<std::string> screenshot_path;
  std::vector<LogoCandidate> logo_candidates;
  std::optional<Vector> text_embedding;
  // "fnv1a64:<hex>" of the processed text the embedding was computed from.
  std::optional<std::string> text_hash;
  std::optional<Label> label;
  std::optional<std::string> target_brand_label;
  std::filesystem::path base_dir;

  std::filesystem::path resolved_html_path() const;
  std::optional<std::filesystem::path> resolved_screenshot_path() const;

  bool operator==(const SampleRecord&) const = default;
};

SampleRecord sample_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json sample_to_json(const SampleRecord& record);

/// A single SampleRecord stored as a JSON document.
SampleRecord load_sample(const std::filesystem::path& path);

/// JSON Lines manifest; rejects duplicate sample ids.
std::vector<SampleRecord> parse_manifest(std::istream& in, const std::filesystem::path& base_dir);
std::vector<SampleRecord> load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const std::vector<SampleRecord>& records);
void save_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records);

std::string processed_text_hash(std::string_view processed_text);

/// Reads the HTML and checks text_hash when present (Parse error on mismatch).
RawWebpage load_raw_webpage(const SampleRecord& record);

/// Training labels: {"sample_id", "label", "text_embedding", "logo_embedding"|null}.
std::vector<LabeledWebpage> load_labeled_webpages(const std::filesystem::path& path);
std::vector<LabeledWebpage> parse_labeled_webpages(std::istream& in);
void write_labeled_webpages(std::ostream& out, const std::vector<LabeledWebpage>& pages);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace phishagent
