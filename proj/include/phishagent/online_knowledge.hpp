#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace phishagent {

inline constexpr std::size_t kDefaultSearchK = 5;

struct SearchResultItem {
  std::string domain;
  std::string title;
  std::string snippet;

  bool operator==(const SearchResultItem&) const = default;
};

/// A web search engine. Implementations must be safe for concurrent calls.
class SearchClient {
 public:
  virtual ~SearchClient() = default;
  /// At most k items in engine rank order.
  virtual std::vector<SearchResultItem> query(const std::string& q, std::size_t k) = 0;
};

/// Recorded search results keyed by the exact query string.
class FixtureStore {
 public:
  FixtureStore() = default;
  explicit FixtureStore(std::map<std::string, std::vector<SearchResultItem>> results);

  static FixtureStore parse(std::string_view json_text);
  static FixtureStore load(const std::filesystem::path& path);
  std::string to_json() const;

  const std::vector<SearchResultItem>* find(const std::string& q) const;
  const std::map<std::string, std::vector<SearchResultItem>>& results() const noexcept { return results_; }

 private:
  std::map<std::string, std::vector<SearchResultItem>> results_;
};

/// Replays a FixtureStore; unknown queries throw MissingFixture.
class FixtureClient : public SearchClient {
 public:
  explicit FixtureClient(FixtureStore store);

  std::vector<SearchResultItem> query(const std::string& q, std::size_t k) override;

  std::size_t query_count() const noexcept { return count_.load(); }
  std::vector<std::string> query_log() const;
  void reset_log();

 private:
  FixtureStore store_;
  std::atomic<std::size_t> count_{0};
  mutable std::mutex mu_;
  std::vector<std::string> log_;
};

/// R_domain: results for the bare domain string.
std::vector<SearchResultItem> query_domain(SearchClient& client, const std::string& domain,
                                           std::size_t k = kDefaultSearchK);
/// R_brand: results for the brand name.
std::vector<SearchResultItem> query_brand(SearchClient& client, const std::string& brand,
                                          std::size_t k = kDefaultSearchK);

/// r_domain followed by r_brand, dropping repeats of a (domain, title) key.
std::vector<SearchResultItem> union_results(const std::vector<SearchResultItem>& r_domain,
                                            const std::vector<SearchResultItem>& r_brand);

}  // namespace phishagent
