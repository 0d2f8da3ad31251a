#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phishagent/embedding_math.hpp"

namespace phishagent {

struct LogoCandidate {
  Vector embedding;
  double confidence = 0.0;

  bool operator==(const LogoCandidate&) const = default;
};

struct RawWebpage {
  std::string sample_id;
  std::string url;
  std::string html;
  std::optional<std::string> screenshot_ref;
  std::vector<LogoCandidate> logo_candidates;
  // Base text embedding of the processed HTML, produced by an external encoder.
  std::optional<Vector> text_embedding;
};

struct ProcessedWebpage {
  std::string sample_id;
  std::string url;
  std::string domain;
  std::string processed_html;
  std::optional<Vector> identity_logo;
  std::optional<std::string> screenshot_ref;
  std::optional<Vector> text_embedding;
};

/// Drops comments, doctype, script and style bodies and every tag, decodes
/// HTML 4 named and numeric character references, and joins the remaining
/// text nodes with single spaces.
std::string strip_html_to_text(std::string_view html);

/// Lowercase host of `url` without scheme, userinfo, port, path, query or
/// fragment. "www." is kept. Throws InvalidUrl.
std::string extract_domain(std::string_view url);

/// Highest-confidence candidate (lowest index on ties), or nothing.
std::optional<Vector> select_identity_logo(const std::vector<LogoCandidate>& candidates);

/// Throws Preprocess (wrapping InvalidUrl and invalid candidate confidences).
ProcessedWebpage preprocess(const RawWebpage& raw);

}  // namespace phishagent
