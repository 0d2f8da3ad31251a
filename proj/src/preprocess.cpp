#include "phishagent/preprocess.hpp"

#include <cctype>

#include "html_entities.hpp"
#include "phishagent/errors.hpp"
#include "phishagent/text_util.hpp"

namespace phishagent {

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

bool opens_tag(std::string_view s, std::size_t lt) {
  if (lt + 1 >= s.size()) return false;
  const char c = s[lt + 1];
  return is_alpha(c) || c == '/' || c == '!' || c == '?';
}

// Index one past the '>' closing the tag that starts at `lt`, honoring quoted
// attribute values.
std::size_t tag_end(std::string_view s, std::size_t lt) {
  char quote = 0;
  for (std::size_t i = lt + 1; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      return i + 1;
    }
  }
  return s.size();
}

std::string tag_name(std::string_view s, std::size_t lt) {
  std::size_t i = lt + 1;
  if (i < s.size() && s[i] == '/') ++i;
  std::size_t b = i;
  while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '-' || s[i] == ':')) ++i;
  return text::to_lower_ascii(s.substr(b, i - b));
}

std::size_t find_ci(std::string_view s, std::string_view needle, std::size_t from) {
  for (std::size_t i = from; i + needle.size() <= s.size(); ++i) {
    if (text::iequals(s.substr(i, needle.size()), needle)) return i;
  }
  return std::string_view::npos;
}

void decode_entities(std::string_view raw, std::string& out) {
  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw[i] != '&') {
      out.push_back(raw[i++]);
      continue;
    }
    const auto semi = raw.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 32) {
      out.push_back(raw[i++]);
      continue;
    }
    const auto body = raw.substr(i + 1, semi - i - 1);
    std::optional<char32_t> cp;
    if (body.size() >= 2 && body[0] == '#') {
      const bool hex = body[1] == 'x' || body[1] == 'X';
      const auto digits = body.substr(hex ? 2 : 1);
      bool ok = !digits.empty() && digits.size() <= 8;
      unsigned long value = 0;
      for (char c : digits) {
        const auto uc = static_cast<unsigned char>(c);
        if (hex ? !std::isxdigit(uc) : !std::isdigit(uc)) {
          ok = false;
          break;
        }
        value = value * (hex ? 16 : 10) +
                static_cast<unsigned long>(std::isdigit(uc) ? c - '0' : std::tolower(uc) - 'a' + 10);
      }
      if (ok) {
        const bool valid = value != 0 && value <= 0x10FFFF && !(value >= 0xD800 && value <= 0xDFFF);
        cp = valid ? static_cast<char32_t>(value) : U'�';
      }
    } else {
      cp = detail::lookup_named_entity(body);
    }
    if (!cp) {
      out.push_back(raw[i++]);
      continue;
    }
    text::utf8_append(out, *cp);
    i = semi + 1;
  }
}

}  // namespace

std::string strip_html_to_text(std::string_view html) {
  std::string joined;
  joined.reserve(html.size());
  std::size_t text_start = 0;
  std::size_t i = 0;
  auto flush = [&](std::size_t end) {
    if (end > text_start) decode_entities(html.substr(text_start, end - text_start), joined);
    joined.push_back(' ');
  };
  while (i < html.size()) {
    if (html[i] != '<' || !opens_tag(html, i)) {
      ++i;
      continue;
    }
    flush(i);
    if (html.compare(i, 4, "<!--") == 0) {
      const auto close = html.find("-->", i + 4);
      i = close == std::string_view::npos ? html.size() : close + 3;
    } else {
      const std::string name = tag_name(html, i);
      const bool closing = html[i + 1] == '/';
      i = tag_end(html, i);
      if (!closing && (name == "script" || name == "style")) {
        const auto close = find_ci(html, "</" + name, i);
        i = close == std::string_view::npos ? html.size() : tag_end(html, close);
      }
    }
    text_start = i;
  }
  flush(html.size());

  std::string collapsed = text::collapse_whitespace(joined);
  // A decoded '<' must not read as a tag opener in the output.
  std::string out;
  out.reserve(collapsed.size());
  for (std::size_t k = 0; k < collapsed.size(); ++k) {
    out.push_back(collapsed[k]);
    if (collapsed[k] == '<' && opens_tag(collapsed, k)) out.push_back(' ');
  }
  return out;
}

std::string extract_domain(std::string_view url) {
  const auto fail = [&] { return Error(ErrorKind::InvalidUrl, "'" + std::string(url) + "'"); };
  std::string s = text::to_lower_ascii(text::trim(url));
  if (s.empty()) throw fail();

  std::string_view rest = s;
  if (const auto sep = rest.find("://"); sep != std::string_view::npos) {
    const auto scheme = rest.substr(0, sep);
    if (scheme.empty() || !is_alpha(scheme[0])) throw fail();
    for (char c : scheme) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.')) throw fail();
    }
    rest.remove_prefix(sep + 3);
  } else if (rest.substr(0, 2) == "//") {
    rest.remove_prefix(2);
  }

  auto authority = rest.substr(0, rest.find_first_of("/?#"));
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);

  std::string_view host;
  std::string_view port;
  if (!authority.empty() && authority.front() == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) throw fail();
    host = authority.substr(1, close - 1);
    const auto after = authority.substr(close + 1);
    if (!after.empty()) {
      if (after.front() != ':') throw fail();
      port = after.substr(1);
    }
    if (host.empty()) throw fail();
    for (char c : host) {
      if (!(std::isxdigit(static_cast<unsigned char>(c)) || c == ':' || c == '.')) throw fail();
    }
  } else {
    const auto colon = authority.find(':');
    host = authority.substr(0, colon);
    if (colon != std::string_view::npos) port = authority.substr(colon + 1);
    while (!host.empty() && host.back() == '.') host.remove_suffix(1);
    if (host.empty()) throw fail();
    for (const auto& label : text::split(host, '.')) {
      if (label.empty()) throw fail();
      for (char c : label) {
        const auto uc = static_cast<unsigned char>(c);
        if (!(std::isalnum(uc) || c == '-' || c == '_' || uc >= 0x80)) throw fail();
      }
    }
  }
  for (char c : port) {
    if (!std::isdigit(static_cast<unsigned char>(c))) throw fail();
  }
  return std::string(host);
}

std::optional<Vector> select_identity_logo(const std::vector<LogoCandidate>& candidates) {
  const LogoCandidate* best = nullptr;
  for (const auto& c : candidates) {
    if (!best || c.confidence > best->confidence) best = &c;
  }
  if (!best) return std::nullopt;
  return best->embedding;
}

ProcessedWebpage preprocess(const RawWebpage& raw) {
  if (raw.url.empty()) throw Error(ErrorKind::Preprocess, "sample '" + raw.sample_id + "' has an empty url");
  for (const auto& c : raw.logo_candidates) {
    if (!(c.confidence >= 0.0 && c.confidence <= 1.0)) {
      throw Error(ErrorKind::Preprocess, "sample '" + raw.sample_id + "' has a logo confidence outside [0,1]");
    }
  }
  ProcessedWebpage page;
  page.sample_id = raw.sample_id;
  page.url = raw.url;
  try {
    page.domain = extract_domain(raw.url);
  } catch (const Error& e) {
    throw Error(ErrorKind::Preprocess, e.what());
  }
  page.processed_html = strip_html_to_text(raw.html);
  page.identity_logo = select_identity_logo(raw.logo_candidates);
  page.screenshot_ref = raw.screenshot_ref;
  page.text_embedding = raw.text_embedding;
  return page;
}

}  // namespace phishagent
