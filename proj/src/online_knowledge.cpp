#include "phishagent/online_knowledge.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "phishagent/errors.hpp"
#include "phishagent/text_util.hpp"

namespace phishagent {

using nlohmann::json;

FixtureStore::FixtureStore(std::map<std::string, std::vector<SearchResultItem>> results)
    : results_(std::move(results)) {
  for (auto& [q, items] : results_) {
    for (auto& item : items) {
      item.domain = text::to_lower_ascii(item.domain);
      if (item.domain.empty()) throw Error(ErrorKind::Parse, "fixture for '" + q + "' has an item without domain");
    }
  }
}

FixtureStore FixtureStore::parse(std::string_view json_text) {
  std::map<std::string, std::vector<SearchResultItem>> results;
  try {
    const auto j = json::parse(json_text);
    for (const auto& [q, arr] : j.items()) {
      auto& items = results[q];
      for (const auto& it : arr) {
        items.push_back({it.at("domain").get<std::string>(), it.value("title", ""), it.value("snippet", "")});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("search fixtures: ") + e.what());
  }
  return FixtureStore(std::move(results));
}

FixtureStore FixtureStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string FixtureStore::to_json() const {
  json j = json::object();
  for (const auto& [q, items] : results_) {
    json arr = json::array();
    for (const auto& it : items) arr.push_back({{"domain", it.domain}, {"title", it.title}, {"snippet", it.snippet}});
    j[q] = std::move(arr);
  }
  return j.dump(2);
}

const std::vector<SearchResultItem>* FixtureStore::find(const std::string& q) const {
  auto it = results_.find(q);
  return it == results_.end() ? nullptr : &it->second;
}

FixtureClient::FixtureClient(FixtureStore store) : store_(std::move(store)) {}

std::vector<SearchResultItem> FixtureClient::query(const std::string& q, std::size_t k) {
  ++count_;
  {
    std::lock_guard lock(mu_);
    log_.push_back(q);
  }
  const auto* items = store_.find(q);
  if (!items) throw Error(ErrorKind::MissingFixture, "no recorded results for query '" + q + "'");
  std::vector<SearchResultItem> out(items->begin(), items->begin() + static_cast<std::ptrdiff_t>(std::min(k, items->size())));
  return out;
}

std::vector<std::string> FixtureClient::query_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

void FixtureClient::reset_log() {
  std::lock_guard lock(mu_);
  log_.clear();
  count_ = 0;
}

std::vector<SearchResultItem> query_domain(SearchClient& client, const std::string& domain, std::size_t k) {
  if (domain.empty()) throw Error(ErrorKind::InvalidArgument, "empty domain query");
  return client.query(domain, k);
}

std::vector<SearchResultItem> query_brand(SearchClient& client, const std::string& brand, std::size_t k) {
  if (brand.empty()) throw Error(ErrorKind::InvalidArgument, "empty brand query");
  return client.query(brand, k);
}

std::vector<SearchResultItem> union_results(const std::vector<SearchResultItem>& r_domain,
                                            const std::vector<SearchResultItem>& r_brand) {
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<SearchResultItem> out;
  out.reserve(r_domain.size() + r_brand.size());
  for (const auto* list : {&r_domain, &r_brand}) {
    for (const auto& item : *list) {
      if (seen.emplace(item.domain, item.title).second) out.push_back(item);
    }
  }
  return out;
}

}  // namespace phishagent
