#include "phishagent/knowledge_base.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "phishagent/errors.hpp"
#include "phishagent/text_util.hpp"

namespace phishagent {

using nlohmann::json;

namespace {

void validate_domain(const std::string& domain, const std::string& brand_id) {
  const bool bad = domain.empty() || domain != text::to_lower_ascii(domain) ||
                   domain.find("://") != std::string::npos ||
                   domain.find_first_of("/ \t?#") != std::string::npos;
  if (bad) {
    throw Error(ErrorKind::InvalidArgument, "brand '" + brand_id + "' has invalid domain '" + domain + "'");
  }
}

void validate_brand(const Brand& b, std::size_t dimension) {
  if (b.id.empty()) throw Error(ErrorKind::InvalidArgument, "brand id is empty");
  if (b.name.empty()) throw Error(ErrorKind::InvalidArgument, "brand '" + b.id + "' has an empty name");
  for (const auto& alias : b.aliases) {
    if (alias.empty()) throw Error(ErrorKind::InvalidArgument, "brand '" + b.id + "' has an empty alias");
  }
  for (const auto& d : b.domains) validate_domain(d, b.id);
  std::set<int> seen;
  for (const auto& v : b.logo_variants) {
    if (!seen.insert(v.variant_index).second) {
      throw Error(ErrorKind::InvalidArgument, "brand '" + b.id + "' repeats variant_index " +
                                                  std::to_string(v.variant_index));
    }
    if (v.variant_index < 0) {
      throw Error(ErrorKind::InvalidArgument, "brand '" + b.id + "' has a negative variant_index");
    }
    if (v.embedding.size() != dimension) {
      throw Error(ErrorKind::DimensionMismatch, "brand '" + b.id + "' variant " + std::to_string(v.variant_index) +
                                                    " has " + std::to_string(v.embedding.size()) +
                                                    " components, expected " + std::to_string(dimension));
    }
    require_finite(v.embedding, "logo embedding");
  }
}

std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  for (const auto& item : j.at(key)) out.push_back(item.get<std::string>());
  return out;
}

// Embeddings are stored as 32-bit values on disk.
Vector float_vector(const json& arr) {
  Vector out;
  out.reserve(arr.size());
  for (const auto& x : arr) out.push_back(static_cast<double>(static_cast<float>(x.get<double>())));
  return out;
}

Brand brand_from_json(const json& j) {
  Brand b;
  b.id = j.at("id").get<std::string>();
  b.name = j.at("name").get<std::string>();
  b.aliases = string_list(j, "aliases");
  b.domains = string_list(j, "domains");
  if (j.contains("logo_variants")) {
    for (const auto& v : j.at("logo_variants")) {
      b.logo_variants.push_back({v.at("variant_index").get<int>(), float_vector(v.at("embedding"))});
    }
  }
  return b;
}

}  // namespace

const LogoVariant* Brand::find_variant(int variant_index) const {
  for (const auto& v : logo_variants) {
    if (v.variant_index == variant_index) return &v;
  }
  return nullptr;
}

BrandKnowledgeBase::BrandKnowledgeBase(std::size_t dimension, std::vector<Brand> brands)
    : dimension_(dimension), brands_(std::move(brands)) {
  if (dimension_ == 0) throw Error(ErrorKind::InvalidArgument, "BKB dimension must be positive");
  for (std::size_t i = 0; i < brands_.size(); ++i) {
    const Brand& b = brands_[i];
    validate_brand(b, dimension_);
    if (!by_id_.emplace(b.id, i).second) throw Error(ErrorKind::DuplicateBrandId, "duplicate brand id '" + b.id + "'");
    for (const auto& d : b.domains) {
      auto& ids = domain_index_[d];
      if (std::find(ids.begin(), ids.end(), b.id) == ids.end()) ids.push_back(b.id);
    }
    auto add_name = [&](const std::string& label) {
      const auto key = text::normalize_label(label);
      if (key.empty()) return;
      auto& ids = name_index_[key];
      if (std::find(ids.begin(), ids.end(), b.id) == ids.end()) ids.push_back(b.id);
    };
    add_name(b.name);
    for (const auto& a : b.aliases) add_name(a);
  }
}

const Brand* BrandKnowledgeBase::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &brands_[it->second];
}

const Brand& BrandKnowledgeBase::at(std::string_view id) const {
  const Brand* b = find(id);
  if (!b) throw Error(ErrorKind::InvalidArgument, "unknown brand id '" + std::string(id) + "'");
  return *b;
}

std::vector<std::string> BrandKnowledgeBase::lookup_brands_by_name(std::string_view label) const {
  auto it = name_index_.find(text::normalize_label(label));
  return it == name_index_.end() ? std::vector<std::string>{} : it->second;
}

GroundingResult BrandKnowledgeBase::ground_label(std::string_view label) const {
  const auto ids = lookup_brands_by_name(label);
  if (ids.empty()) return grounding::NoMatch{};
  if (ids.size() == 1) return grounding::Matched{ids.front()};
  return grounding::Ambiguous{ids.size()};
}

std::vector<std::string> BrandKnowledgeBase::brands_for_domain(std::string_view domain) const {
  auto it = domain_index_.find(std::string(domain));
  return it == domain_index_.end() ? std::vector<std::string>{} : it->second;
}

std::set<std::string> BrandKnowledgeBase::all_known_domains() const {
  std::set<std::string> out;
  for (const auto& [domain, ids] : domain_index_) out.insert(domain);
  return out;
}

BrandKnowledgeBase parse_bkb(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t dimension = 0;
  bool have_header = false;
  std::vector<Brand> brands;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, where + e.what());
    }
    if (!have_header) {
      try {
        dimension = j.at("dimension").get<std::size_t>();
        const int version = j.value("format_version", BrandKnowledgeBase::kFormatVersion);
        if (version != BrandKnowledgeBase::kFormatVersion) {
          throw Error(ErrorKind::Parse, where + "unsupported format_version " + std::to_string(version));
        }
      } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, where + "bad header record: " + e.what());
      }
      if (dimension == 0) throw Error(ErrorKind::Parse, where + "dimension must be positive");
      have_header = true;
      continue;
    }
    Brand b;
    try {
      b = brand_from_json(j);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, where + e.what());
    }
    try {
      validate_brand(b, dimension);
    } catch (const Error& e) {
      const auto kind = e.kind() == ErrorKind::DimensionMismatch ? e.kind() : ErrorKind::Parse;
      throw Error(kind, where + e.what());
    }
    if (!ids.insert(b.id).second) throw Error(ErrorKind::DuplicateBrandId, where + "duplicate brand id '" + b.id + "'");
    brands.push_back(std::move(b));
  }
  if (!have_header) throw Error(ErrorKind::Parse, "missing header record");
  return BrandKnowledgeBase(dimension, std::move(brands));
}

BrandKnowledgeBase load_bkb(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_bkb(in);
}

void write_bkb(std::ostream& out, const BrandKnowledgeBase& bkb) {
  out << json{{"dimension", bkb.dimension()}, {"format_version", BrandKnowledgeBase::kFormatVersion}}.dump() << '\n';
  for (const auto& b : bkb.brands()) {
    json variants = json::array();
    for (const auto& v : b.logo_variants) {
      json emb = json::array();
      for (double x : v.embedding) emb.push_back(static_cast<float>(x));
      variants.push_back({{"variant_index", v.variant_index}, {"embedding", std::move(emb)}});
    }
    json j = {{"id", b.id},
              {"name", b.name},
              {"aliases", b.aliases},
              {"domains", b.domains},
              {"logo_variants", std::move(variants)}};
    out << j.dump() << '\n';
  }
}

void save_bkb(const std::filesystem::path& path, const BrandKnowledgeBase& bkb) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  write_bkb(out, bkb);
}

}  // namespace phishagent
