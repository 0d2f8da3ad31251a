#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "phishagent/model_backend.hpp"
#include "phishagent/online_knowledge.hpp"

namespace phishagent {

struct HttpSearchConfig {
  std::string endpoint;  // e.g. https://www.googleapis.com/customsearch/v1
  std::string api_key;   // from SEARCH_API_KEY
  std::string engine_id; // optional "cx" parameter
  std::chrono::seconds timeout{30};
};

/// Generic JSON search API: GET endpoint?q=..&num=k&key=..; response items
/// map displayLink -> domain, title, snippet.
class HttpSearchClient : public SearchClient {
 public:
  explicit HttpSearchClient(HttpSearchConfig config);
  std::vector<SearchResultItem> query(const std::string& q, std::size_t k) override;

 private:
  HttpSearchConfig config_;
};

/// Maps a search API response body onto result items.
std::vector<SearchResultItem> parse_search_response(const std::string& body, std::size_t k);

struct HttpModelConfig {
  std::string endpoint;  // chat-completions style URL, from MODEL_ENDPOINT
  std::string api_key;   // from MODEL_API_KEY
  std::string model = "gpt-4o";
  std::chrono::seconds timeout{30};
  std::size_t max_in_flight = 4;
};

/// Sends the rendered prompt (plus the screenshot as a data URL for the
/// image templates) to a chat-completions style API and parses the reply.
class HttpModelBackend : public ModelBackend {
 public:
  explicit HttpModelBackend(HttpModelConfig config);
  ~HttpModelBackend() override;

  ModelResponse invoke(const ModelRequest& request) override;

  /// The JSON request body that invoke() would send.
  std::string request_body(const ModelRequest& request) const;

 private:
  struct Limiter;
  HttpModelConfig config_;
  std::unique_ptr<Limiter> limiter_;
};

std::string base64_encode(std::string_view bytes);

/// Experimental helper behind the `fetch` subcommand.
std::string http_get(const std::string& url, std::chrono::seconds timeout);

}  // namespace phishagent
