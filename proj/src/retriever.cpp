#include "phishagent/retriever.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "phishagent/errors.hpp"
#include "phishagent/text_util.hpp"

namespace phishagent {

using nlohmann::json;

AliasEmbeddings parse_alias_embeddings(std::istream& in) {
  AliasEmbeddings out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      Vector v;
      for (const auto& x : j.at("alias_text_embedding")) v.push_back(static_cast<float>(x.get<double>()));
      const auto id = j.at("brand_id").get<std::string>();
      if (!out.emplace(id, std::move(v)).second) {
        throw Error(ErrorKind::DuplicateBrandId, "line " + std::to_string(line_no) + ": duplicate brand_id '" + id + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

AliasEmbeddings load_alias_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_alias_embeddings(in);
}

void write_alias_embeddings(std::ostream& out, const AliasEmbeddings& embeddings) {
  for (const auto& [id, v] : embeddings) {
    json arr = json::array();
    for (double x : v) arr.push_back(static_cast<float>(x));
    out << json{{"brand_id", id}, {"alias_text_embedding", std::move(arr)}}.dump() << '\n';
  }
}

std::string build_alias_string(const std::string& name, const std::vector<std::string>& aliases) {
  if (aliases.empty()) return name;
  std::string out = name + ", also known as ";
  for (std::size_t i = 0; i < aliases.size(); ++i) {
    if (i) out += ", ";
    out += aliases[i];
  }
  return out;
}

Vector encode_webpage(const WebpageFeatures& features, const ProjectionHead& head, const ModalityWeights& weights) {
  const Vector text = project(head, features.text_embedding, Modality::Text);
  if (!features.logo_embedding) return weighted_combine(text, std::nullopt, weights.webpage_text, weights.webpage_image);
  const Vector logo = project(head, *features.logo_embedding, Modality::Image);
  return weighted_combine(text, std::span<const double>(logo), weights.webpage_text, weights.webpage_image);
}

Vector encode_brand(const Brand& brand, int variant_index, std::span<const double> text_base,
                    const ProjectionHead& head, const ModalityWeights& weights) {
  const Vector text = project(head, text_base, Modality::Text);
  if (brand.logo_variants.empty()) {
    if (variant_index != kTextOnlyVariant) {
      throw Error(ErrorKind::UnknownVariant, "brand '" + brand.id + "' has no logo variant " + std::to_string(variant_index));
    }
    return weighted_combine(text, std::nullopt, weights.brand_text, weights.brand_image);
  }
  const LogoVariant* variant = brand.find_variant(variant_index);
  if (!variant) {
    throw Error(ErrorKind::UnknownVariant, "brand '" + brand.id + "' has no logo variant " + std::to_string(variant_index));
  }
  const Vector logo = project(head, variant->embedding, Modality::Image);
  return weighted_combine(text, std::span<const double>(logo), weights.brand_text, weights.brand_image);
}

std::vector<int> indexed_variants(const Brand& brand) {
  if (brand.logo_variants.empty()) return {kTextOnlyVariant};
  std::vector<int> out;
  for (const auto& v : brand.logo_variants) out.push_back(v.variant_index);
  std::sort(out.begin(), out.end());
  return out;
}

BrandIndex::BrandIndex(std::vector<Entry> entries, std::size_t k_default)
    : entries_(std::move(entries)), k_default_(k_default) {
  std::set<std::pair<std::string, int>> seen;
  for (const auto& e : entries_) {
    if (!seen.emplace(e.brand_id, e.variant_index).second) {
      throw Error(ErrorKind::InvalidArgument, "index repeats brand '" + e.brand_id + "' variant " +
                                                  std::to_string(e.variant_index));
    }
    if (e.encoding.size() != entries_.front().encoding.size()) {
      throw Error(ErrorKind::DimensionMismatch, "index entries differ in dimension");
    }
    require_finite(e.encoding, "index encoding");
    if (std::abs(norm2(e.encoding) - 1.0) > 1e-6) {
      throw Error(ErrorKind::InvalidArgument, "index encoding for '" + e.brand_id + "' is not unit norm");
    }
  }
}

BrandIndex BrandIndex::build(const BrandKnowledgeBase& bkb, const AliasEmbeddings& alias_embeddings,
                             const ProjectionHead& head, const ModalityWeights& weights, std::size_t k_default) {
  if (head.dim() != bkb.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "projection head dimension " + std::to_string(head.dim()) +
                                                  " vs BKB dimension " + std::to_string(bkb.dimension()));
  }
  std::vector<Entry> entries;
  for (const auto& brand : bkb.brands()) {
    auto it = alias_embeddings.find(brand.id);
    if (it == alias_embeddings.end()) {
      throw Error(ErrorKind::InvalidArgument, "no alias text embedding for brand '" + brand.id + "'");
    }
    if (it->second.size() != bkb.dimension()) {
      throw Error(ErrorKind::DimensionMismatch, "alias embedding of brand '" + brand.id + "' has wrong dimension");
    }
    for (int variant : indexed_variants(brand)) {
      entries.push_back({brand.id, variant, encode_brand(brand, variant, it->second, head, weights)});
    }
  }
  return BrandIndex(std::move(entries), k_default);
}

std::size_t BrandIndex::distinct_brands() const {
  std::set<std::string> ids;
  for (const auto& e : entries_) ids.insert(e.brand_id);
  return ids.size();
}

std::vector<RetrievalHit> BrandIndex::retrieve_top_k(std::span<const double> query, std::size_t k) const {
  if (entries_.empty()) throw Error(ErrorKind::EmptyIndex, "retrieval over an empty index");
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "k must be at least 1");

  auto better = [](const RetrievalHit& a, const RetrievalHit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.brand_id != b.brand_id) return a.brand_id < b.brand_id;
    return a.variant_index < b.variant_index;
  };

  std::unordered_map<std::string, std::size_t> slot;
  std::vector<RetrievalHit> best;
  for (const auto& e : entries_) {
    RetrievalHit hit{e.brand_id, e.variant_index, dot(query, e.encoding)};
    auto [it, inserted] = slot.try_emplace(e.brand_id, best.size());
    if (inserted) {
      best.push_back(std::move(hit));
    } else if (better(hit, best[it->second])) {
      best[it->second] = std::move(hit);
    }
  }
  const std::size_t n = std::min(k, best.size());
  std::partial_sort(best.begin(), best.begin() + static_cast<std::ptrdiff_t>(n), best.end(), better);
  best.resize(n);
  return best;
}

}  // namespace phishagent
