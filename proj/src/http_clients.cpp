#include "phishagent/http_clients.hpp"

#include <condition_variable>
#include <fstream>
#include <mutex>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "phishagent/errors.hpp"
#include "phishagent/text_util.hpp"

namespace phishagent {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::InvalidArgument, "endpoint needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::unique_ptr<httplib::Client> make_client(const std::string& origin, std::chrono::seconds timeout) {
  auto client = std::make_unique<httplib::Client>(origin);
  client->set_connection_timeout(timeout);
  client->set_read_timeout(timeout);
  client->set_write_timeout(timeout);
  client->set_follow_location(true);
  return client;
}

[[noreturn]] void throw_transport(const httplib::Result& res, const std::string& what, ErrorKind kind) {
  if (!res) {
    const auto err = res.error();
    const auto k = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout ? ErrorKind::Timeout : kind;
    throw Error(k, what + ": " + httplib::to_string(err));
  }
  throw Error(kind, what + ": HTTP " + std::to_string(res->status));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto n = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                   static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  if (i < bytes.size()) {
    unsigned n = static_cast<unsigned char>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) n |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += i + 1 < bytes.size() ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<SearchResultItem> parse_search_response(const std::string& body, std::size_t k) {
  std::vector<SearchResultItem> out;
  try {
    const auto j = json::parse(body);
    if (!j.contains("items")) return out;
    for (const auto& it : j.at("items")) {
      if (out.size() >= k) break;
      auto domain = text::to_lower_ascii(it.value("displayLink", ""));
      if (domain.empty()) continue;
      out.push_back({std::move(domain), it.value("title", ""), it.value("snippet", "")});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ClientError, std::string("malformed search response: ") + e.what());
  }
  return out;
}

HttpSearchClient::HttpSearchClient(HttpSearchConfig config) : config_(std::move(config)) {}

std::vector<SearchResultItem> HttpSearchClient::query(const std::string& q, std::size_t k) {
  const auto [origin, path] = split_url(config_.endpoint);
  auto client = make_client(origin, config_.timeout);
  httplib::Params params{{"q", q}, {"num", std::to_string(k)}};
  if (!config_.api_key.empty()) params.emplace("key", config_.api_key);
  if (!config_.engine_id.empty()) params.emplace("cx", config_.engine_id);
  auto res = client->Get(path, params, httplib::Headers{});
  if (!res || res->status != 200) throw_transport(res, "search query '" + q + "'", ErrorKind::ClientError);
  return parse_search_response(res->body, k);
}

struct HttpModelBackend::Limiter {
  std::mutex mu;
  std::condition_variable cv;
  std::size_t in_flight = 0;
  std::size_t limit = 1;
};

HttpModelBackend::HttpModelBackend(HttpModelConfig config)
    : config_(std::move(config)), limiter_(std::make_unique<Limiter>()) {
  limiter_->limit = std::max<std::size_t>(1, config_.max_in_flight);
}

HttpModelBackend::~HttpModelBackend() = default;

std::string HttpModelBackend::request_body(const ModelRequest& request) const {
  const auto& tmpl = prompt_template(request.template_id);
  const std::string prompt = render_prompt(request.template_id, request.substitutions);
  json messages = json::array();
  if (!tmpl.system.empty()) messages.push_back({{"role", "system"}, {"content", std::string(tmpl.system)}});
  const bool wants_image = request.template_id == TemplateId::ImageBrandExtractor ||
                           request.template_id == TemplateId::Recheck;
  if (wants_image && request.image_ref) {
    const std::string data_url = "data:image/png;base64," + base64_encode(read_file(*request.image_ref));
    messages.push_back({{"role", "user"},
                        {"content", json::array({{{"type", "text"}, {"text", prompt}},
                                                 {{"type", "image_url"}, {"image_url", {{"url", data_url}}}}})}});
  } else {
    messages.push_back({{"role", "user"}, {"content", prompt}});
  }
  return json{{"model", config_.model}, {"temperature", request.temperature}, {"messages", std::move(messages)}}.dump();
}

ModelResponse HttpModelBackend::invoke(const ModelRequest& request) {
  const std::string body = request_body(request);
  {
    std::unique_lock lock(limiter_->mu);
    limiter_->cv.wait(lock, [&] { return limiter_->in_flight < limiter_->limit; });
    ++limiter_->in_flight;
  }
  struct Release {
    Limiter& l;
    ~Release() {
      {
        std::lock_guard lock(l.mu);
        --l.in_flight;
      }
      l.cv.notify_one();
    }
  } release{*limiter_};

  const auto [origin, path] = split_url(config_.endpoint);
  auto client = make_client(origin, config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  auto res = client->Post(path, headers, body, "application/json");
  if (!res || res->status != 200) throw_transport(res, "model call", ErrorKind::BackendUnavailable);
  std::string raw;
  try {
    const auto j = json::parse(res->body);
    raw = j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BackendUnavailable, std::string("malformed model response: ") + e.what());
  }
  return {raw, parse_response(request.template_id, raw)};
}

std::string http_get(const std::string& url, std::chrono::seconds timeout) {
  const auto [origin, path] = split_url(url);
  auto client = make_client(origin, timeout);
  auto res = client->Get(path);
  if (!res || res->status != 200) throw_transport(res, "GET " + url, ErrorKind::ClientError);
  return res->body;
}

}  // namespace phishagent
