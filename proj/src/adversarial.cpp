#include "phishagent/adversarial.hpp"

#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "phishagent/errors.hpp"
#include "phishagent/text_util.hpp"

namespace phishagent {

namespace {

bool is_space32(char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v'; }

std::size_t find_ci(std::string_view s, std::string_view needle, std::size_t from = 0) {
  for (std::size_t i = from; i + needle.size() <= s.size(); ++i) {
    if (text::iequals(s.substr(i, needle.size()), needle)) return i;
  }
  return std::string_view::npos;
}

// Start of an opening tag named `name` (not a longer name like <bodyx>).
std::size_t find_open_tag(std::string_view html, std::string_view name, std::size_t from = 0) {
  const std::string open = "<" + std::string(name);
  for (auto pos = find_ci(html, open, from); pos != std::string_view::npos; pos = find_ci(html, open, pos + 1)) {
    const std::size_t after = pos + open.size();
    if (after >= html.size()) return std::string_view::npos;
    const char c = html[after];
    if (c == '>' || c == '/' || std::isspace(static_cast<unsigned char>(c))) return pos;
  }
  return std::string_view::npos;
}

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

std::string inject_anchor(std::string_view html, std::string_view text) {
  const std::string anchor = "<a>" + std::string(text) + "</a>";
  const auto body = find_open_tag(html, "body");
  if (body == std::string_view::npos) return anchor + std::string(html);
  const auto insert_at = tag_end(html, body);
  std::string out(html.substr(0, insert_at));
  out += anchor;
  out += html.substr(insert_at);
  return out;
}

// One replacement per word; character references (&...;) are left intact.
std::string typosquat_text(std::string_view segment, const HomoglyphTable& table, std::mt19937_64& rng) {
  std::u32string cps = text::utf8_decode(segment);
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && is_space32(cps[i])) ++i;
    const std::size_t start = i;
    while (i < cps.size() && !is_space32(cps[i])) ++i;
    std::vector<std::size_t> mappable;
    bool in_ref = false;
    for (std::size_t k = start; k < i; ++k) {
      if (cps[k] == U'&') in_ref = true;
      if (!in_ref && table.maps(cps[k])) mappable.push_back(k);
      if (cps[k] == U';') in_ref = false;
    }
    if (mappable.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, mappable.size() - 1);
    const std::size_t pos = mappable[pick(rng)];
    cps[pos] = table.replacement(cps[pos]);
  }
  return text::utf8_encode(cps);
}

}  // namespace

HomoglyphTable::HomoglyphTable(std::map<char32_t, char32_t> entries) : entries_(std::move(entries)) {
  for (const auto& [from, to] : entries_) {
    if (from == to) throw Error(ErrorKind::InvalidArgument, "homoglyph entry maps a character to itself");
  }
}

HomoglyphTable HomoglyphTable::default_table() {
  return HomoglyphTable({{U'a', U'а'},
                         {U'e', U'е'},
                         {U'o', U'ο'},
                         {U'p', U'р'},
                         {U'c', U'с'},
                         {U'i', U'і'},
                         {U's', U'ѕ'},
                         {U'x', U'х'}});
}

HomoglyphTable HomoglyphTable::parse(std::string_view json_text) {
  std::map<char32_t, char32_t> entries;
  try {
    const auto j = nlohmann::json::parse(json_text);
    if (!j.is_object()) throw Error(ErrorKind::Parse, "homoglyph table must be a JSON object");
    for (const auto& [k, v] : j.items()) {
      const auto from = text::utf8_decode(k);
      const auto to = text::utf8_decode(v.get<std::string>());
      if (from.size() != 1 || to.size() != 1) {
        throw Error(ErrorKind::Parse, "homoglyph entries must be single code points: '" + k + "'");
      }
      entries[from[0]] = to[0];
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("homoglyph table: ") + e.what());
  }
  return HomoglyphTable(std::move(entries));
}

HomoglyphTable HomoglyphTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

AttackKind parse_attack_kind(std::string_view s) {
  if (s == "spoof") return AttackKind::SpoofHtml;
  if (s == "obfuscate") return AttackKind::ObfuscatePrompt;
  if (s == "typosquat-title") return AttackKind::TyposquatTitle;
  if (s == "typosquat-full") return AttackKind::TyposquatFull;
  throw Error(ErrorKind::InvalidArgument, "unknown attack kind '" + std::string(s) + "'");
}

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::SpoofHtml: return "spoof";
    case AttackKind::ObfuscatePrompt: return "obfuscate";
    case AttackKind::TyposquatTitle: return "typosquat-title";
    case AttackKind::TyposquatFull: return "typosquat-full";
  }
  return "?";
}

std::string inject_brand_spoof_html(std::string_view html, std::string_view payload) {
  return inject_anchor(html, payload);
}

std::string inject_obfuscation_prompt(std::string_view html, std::string_view directive) {
  return inject_anchor(html, directive);
}

std::string typosquat(std::string_view html, TyposquatScope scope, const HomoglyphTable& table, std::uint64_t seed,
                      std::vector<std::string>* warnings) {
  std::mt19937_64 rng(seed);
  std::string out;
  out.reserve(html.size() + html.size() / 4);

  if (scope == TyposquatScope::TitleOnly) {
    const auto open = find_open_tag(html, "title");
    if (open == std::string_view::npos) {
      if (warnings) warnings->emplace_back("no <title> element; typosquat-title left the document unchanged");
      return std::string(html);
    }
    const auto text_start = tag_end(html, open);
    auto close = find_ci(html, "</title", text_start);
    if (close == std::string_view::npos) close = html.size();
    out += html.substr(0, text_start);
    out += typosquat_text(html.substr(text_start, close - text_start), table, rng);
    out += html.substr(close);
    return out;
  }

  std::size_t i = 0;
  std::size_t text_start = 0;
  auto flush = [&](std::size_t end) {
    if (end > text_start) out += typosquat_text(html.substr(text_start, end - text_start), table, rng);
  };
  while (i < html.size()) {
    const bool opens = html[i] == '<' && i + 1 < html.size() &&
                       (std::isalpha(static_cast<unsigned char>(html[i + 1])) || html[i + 1] == '/' ||
                        html[i + 1] == '!' || html[i + 1] == '?');
    if (!opens) {
      ++i;
      continue;
    }
    flush(i);
    std::size_t end;
    if (html.compare(i, 4, "<!--") == 0) {
      const auto close = html.find("-->", i + 4);
      end = close == std::string_view::npos ? html.size() : close + 3;
    } else {
      end = tag_end(html, i);
      const bool closing = html[i + 1] == '/';
      for (std::string_view raw_text : {"script", "style"}) {
        if (!closing && find_open_tag(html.substr(i, end - i), raw_text) == 0) {
          const auto close = find_ci(html, "</" + std::string(raw_text), end);
          end = close == std::string_view::npos ? html.size() : tag_end(html, close);
        }
      }
    }
    out += html.substr(i, end - i);
    i = end;
    text_start = i;
  }
  flush(html.size());
  return out;
}

std::string apply_attack(std::string_view html, const AttackSpec& spec, const HomoglyphTable& table,
                         std::vector<std::string>* warnings) {
  switch (spec.kind) {
    case AttackKind::SpoofHtml:
      return inject_brand_spoof_html(html, spec.payload.empty() ? kDefaultSpoofPayload : spec.payload);
    case AttackKind::ObfuscatePrompt:
      return inject_obfuscation_prompt(html, spec.payload.empty() ? kDefaultObfuscationDirective : spec.payload);
    case AttackKind::TyposquatTitle:
      return typosquat(html, TyposquatScope::TitleOnly, table, spec.seed, warnings);
    case AttackKind::TyposquatFull:
      return typosquat(html, TyposquatScope::FullText, table, spec.seed, warnings);
  }
  return std::string(html);
}

}  // namespace phishagent
