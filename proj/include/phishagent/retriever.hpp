#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phishagent/embedding_math.hpp"
#include "phishagent/knowledge_base.hpp"

namespace phishagent {

/// Index value used for the single text-only entry of a brand without logos.
inline constexpr int kTextOnlyVariant = 0;
inline constexpr std::size_t kDefaultTopK = 5;

struct WebpageFeatures {
  Vector text_embedding;
  std::optional<Vector> logo_embedding;
};

struct RetrievalHit {
  std::string brand_id;
  int variant_index = 0;
  double score = 0.0;

  bool operator==(const RetrievalHit&) const = default;
};

/// Base text embeddings of each brand's alias string, keyed by brand id.
using AliasEmbeddings = std::map<std::string, Vector>;

AliasEmbeddings parse_alias_embeddings(std::istream& in);
AliasEmbeddings load_alias_embeddings(const std::filesystem::path& path);
void write_alias_embeddings(std::ostream& out, const AliasEmbeddings& embeddings);

/// "{name}, also known as {a1}, ..., {aA}", or the bare name without aliases.
std::string build_alias_string(const std::string& name, const std::vector<std::string>& aliases);

Vector encode_webpage(const WebpageFeatures& features, const ProjectionHead& head, const ModalityWeights& weights);

/// Encoding of one (brand, logo variant). For brands without logos only
/// kTextOnlyVariant is valid and the image term is omitted.
Vector encode_brand(const Brand& brand, int variant_index, std::span<const double> text_base,
                    const ProjectionHead& head, const ModalityWeights& weights);

/// Variant indexes that get their own index entry.
std::vector<int> indexed_variants(const Brand& brand);

/// Exact dot-product index with one entry per (brand, variant).
class BrandIndex {
 public:
  struct Entry {
    std::string brand_id;
    int variant_index = 0;
    Vector encoding;
  };

  BrandIndex() = default;
  explicit BrandIndex(std::vector<Entry> entries, std::size_t k_default = kDefaultTopK);

  static BrandIndex build(const BrandKnowledgeBase& bkb, const AliasEmbeddings& alias_embeddings,
                          const ProjectionHead& head, const ModalityWeights& weights,
                          std::size_t k_default = kDefaultTopK);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t k_default() const noexcept { return k_default_; }
  std::size_t distinct_brands() const;

  /// Up to k distinct brands, each represented by its best variant, sorted by
  /// score descending then brand id then variant index.
  std::vector<RetrievalHit> retrieve_top_k(std::span<const double> query, std::size_t k) const;

 private:
  std::vector<Entry> entries_;
  std::size_t k_default_ = kDefaultTopK;
};

}  // namespace phishagent
