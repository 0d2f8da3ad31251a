#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "phishagent/embedding_math.hpp"

namespace phishagent {

struct LogoVariant {
  int variant_index = 0;
  Vector embedding;

  bool operator==(const LogoVariant&) const = default;
};

struct Brand {
  std::string id;
  std::string name;
  std::vector<std::string> aliases;
  std::vector<std::string> domains;
  std::vector<LogoVariant> logo_variants;

  const LogoVariant* find_variant(int variant_index) const;
  bool operator==(const Brand&) const = default;
};

namespace grounding {
struct Matched {
  std::string brand_id;
};
struct NoMatch {};
struct Ambiguous {
  std::size_t count = 0;
};
}  // namespace grounding

using GroundingResult = std::variant<grounding::Matched, grounding::NoMatch, grounding::Ambiguous>;

/// Offline collection of brands with their authentic names, aliases,
/// domains and logo embeddings. Immutable once constructed.
class BrandKnowledgeBase {
 public:
  static constexpr int kFormatVersion = 1;

  BrandKnowledgeBase() = default;

  /// Validates every brand and builds the lookup indexes. Throws
  /// DuplicateBrandId, DimensionMismatch or InvalidArgument.
  BrandKnowledgeBase(std::size_t dimension, std::vector<Brand> brands);

  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<Brand>& brands() const noexcept { return brands_; }
  std::size_t size() const noexcept { return brands_.size(); }

  const Brand* find(std::string_view id) const;
  const Brand& at(std::string_view id) const;

  /// Brand ids whose normalized name or alias equals the normalized label.
  std::vector<std::string> lookup_brands_by_name(std::string_view label) const;
  GroundingResult ground_label(std::string_view label) const;

  /// Brand ids listing exactly this domain.
  std::vector<std::string> brands_for_domain(std::string_view domain) const;
  std::set<std::string> all_known_domains() const;

  const std::map<std::string, std::vector<std::string>>& domain_index() const { return domain_index_; }
  const std::map<std::string, std::vector<std::string>>& name_index() const { return name_index_; }

  bool operator==(const BrandKnowledgeBase& other) const {
    return dimension_ == other.dimension_ && brands_ == other.brands_;
  }

 private:
  std::size_t dimension_ = 0;
  std::vector<Brand> brands_;
  std::map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::string>> domain_index_;
  std::map<std::string, std::vector<std::string>> name_index_;
};

/// JSON Lines: a header {"dimension": d, "format_version": 1} followed by one
/// brand per line. Errors carry the 1-based line number.
BrandKnowledgeBase parse_bkb(std::istream& in);
BrandKnowledgeBase load_bkb(const std::filesystem::path& path);
void write_bkb(std::ostream& out, const BrandKnowledgeBase& bkb);
void save_bkb(const std::filesystem::path& path, const BrandKnowledgeBase& bkb);

}  // namespace phishagent
