#include "phishagent/model_backend.hpp"

#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "phishagent/errors.hpp"
#include "phishagent/text_util.hpp"

namespace phishagent {

using nlohmann::json;

namespace {

constexpr std::string_view kBrandSystem = "You are a helpful assistant that responds in detecting brand name in a webpage.";

constexpr std::string_view kTbeBody = R"(Instruction:
Define targeted brand as a brand that a webpage belongs to. Given the URL and HTML along with the potential brands of a webpage P, answer:
(1) What the targeted brand of P is. The target brand can appear in the HTML or the URL, please look carefully. There are cases where the target brand appears in the url along with other characters, try to identify the target brand from the URL. If the analysis suggests that the brand name is not among the provided list of potential brands, independently identify and determine the correct brand name based on the content. Extract the brand name only and do not include extra details such as affiliated products, countries, or additional abbreviations; If you are not sure about what the targeted brand of P is, please output a brand name from the list of potential brands that you think it is the most relevant to the webpage P. If the brand is not identifiable from the given information, put "Not identifiable". You only output the brand name without any additional explanation.

Input information:
--URL:
"{url}"

--HTML:
"{processed_html}"

Potential brands:
"{top_k_brands_from_offline_knowledge_base}"

Answer:
)";

constexpr std::string_view kIbeBody =
    R"(Instruction: Analyze the provided image to detect a single, authentic brand name, ensuring its accuracy even in the presence of adversarial attacks. If no brand name is identifiable in the image, return "Not identifiable". Output only the genuine brand name without additional explanation. If there are multiple brand names in the image, identify the most suitable and authentic brand name associated with the genuine logo.
)";

constexpr std::string_view kRecheckBody = R"(Instruction:
(1) Analyze the provided image to detect a single, authentic brand name, ensuring its accuracy even in the presence of adversarial attacks. If no brand name is identifiable in the image, return "Not identifiable". Output only the genuine brand name without additional explanation. If there are multiple brand names in the image, identify the most suitable and authentic brand name associated with the genuine logo.
(2) Does the detected brand name in (1) match the brand "{brand_name_old}"? If yes, return "Yes"; if no, return "No" without any explanation.

Example output format:
(1) Singtel
(2) Yes
)";

constexpr std::string_view kTbcBody = R"(Given lists of items found from Google and Knowledge Base.

- A item found from Google has a format as follow:
"[index]. [netloc]/[search title]/[snippet]", the full list is as follows:
"{items_from_online_knowledge}".

- The full list of items found from Knowledge Base is as follows:
"{items_from_offline_knowledge}".

Based on the given searched items, determine if any of the provided searched items mention to the brand "{determined_target_brand}". If yes, return 1; if not, return 0.

Example output: 1
)";

const PromptTemplate kTemplates[] = {
    {TemplateId::TextBrandExtractor, kBrandSystem, kTbeBody,
     {"url", "processed_html", "top_k_brands_from_offline_knowledge_base"}},
    {TemplateId::ImageBrandExtractor, kBrandSystem, kIbeBody, {}},
    {TemplateId::Recheck, kBrandSystem, kRecheckBody, {"brand_name_old"}},
    {TemplateId::TargetBrandChecker, "", kTbcBody,
     {"items_from_online_knowledge", "items_from_offline_knowledge", "determined_target_brand"}},
};

bool is_placeholder_char(char c) { return std::islower(static_cast<unsigned char>(c)) || c == '_'; }

std::string strip_quotes(std::string_view s) {
  s = text::trim(s);
  while (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    s = text::trim(s.substr(1, s.size() - 2));
  }
  return std::string(s);
}

}  // namespace

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::TextBrandExtractor: return "TBE";
    case TemplateId::ImageBrandExtractor: return "IBE";
    case TemplateId::Recheck: return "Recheck";
    case TemplateId::TargetBrandChecker: return "TBC";
  }
  return "?";
}

const PromptTemplate& prompt_template(TemplateId id) {
  for (const auto& t : kTemplates) {
    if (t.id == id) return t;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown template");
}

std::string render_prompt(TemplateId id, const Substitutions& substitutions) {
  const auto body = prompt_template(id).body;
  std::string out;
  out.reserve(body.size() + 256);
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      std::size_t j = i + 1;
      while (j < body.size() && is_placeholder_char(body[j])) ++j;
      if (j < body.size() && body[j] == '}' && j > i + 1) {
        const std::string name(body.substr(i + 1, j - i - 1));
        auto it = substitutions.find(name);
        if (it == substitutions.end()) {
          throw Error(ErrorKind::MissingPlaceholder,
                      "template " + std::string(to_string(id)) + " needs {" + name + "}");
        }
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out.push_back(body[i++]);
  }
  return out;
}

std::string serialize_brand_list(const std::vector<BrandListing>& brands) {
  std::string out;
  for (std::size_t i = 0; i < brands.size(); ++i) {
    if (i) out += "; ";
    out += brands[i].name;
    if (!brands[i].aliases.empty()) {
      out += " (aka ";
      for (std::size_t a = 0; a < brands[i].aliases.size(); ++a) {
        if (a) out += ", ";
        out += brands[i].aliases[a];
      }
      out += ")";
    }
  }
  return out;
}

std::string serialize_search_items(const std::vector<SearchResultItem>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += "\n";
    out += std::to_string(i + 1) + ". " + items[i].domain + "/" + items[i].title + "/" + items[i].snippet;
  }
  return out;
}

ParsedResponse parse_response(TemplateId id, std::string_view raw) {
  switch (id) {
    case TemplateId::TextBrandExtractor:
    case TemplateId::ImageBrandExtractor: {
      const auto name = strip_quotes(raw);
      if (name.empty() || text::icontains(name, "not identifiable")) return parsed::NotIdentifiable{};
      return parsed::BrandName{name};
    }
    case TemplateId::TargetBrandChecker: {
      const auto pos = raw.find_first_of("01");
      return parsed::Binary01{pos != std::string_view::npos && raw[pos] == '1'};
    }
    case TemplateId::Recheck: {
      std::optional<std::string> first;
      std::optional<std::string> second;
      for (const auto& line : text::split(raw, '\n')) {
        const auto t = text::trim(line);
        if (t.rfind("(1)", 0) == 0 && !first) first = strip_quotes(t.substr(3));
        if (t.rfind("(2)", 0) == 0 && !second) second = strip_quotes(t.substr(3));
      }
      if (!first && !second) {
        throw Error(ErrorKind::UnparseableResponse, "recheck answer lacks (1)/(2) lines: '" + std::string(raw) + "'");
      }
      parsed::RecheckPair pair;
      if (first && !first->empty() && !text::icontains(*first, "not identifiable")) pair.brand = *first;
      pair.same_old = second && text::to_lower_ascii(*second).rfind("yes", 0) == 0;
      return pair;
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown template");
}

StubScript StubScript::parse(std::string_view json_text) {
  StubScript s;
  try {
    const auto j = json::parse(json_text);
    s.keyword_table = j.value("keyword_table", std::vector<std::string>{});
    s.screenshot_labels = j.value("screenshot_labels", std::map<std::string, std::string>{});
    s.susceptible_to_injection = j.value("susceptible_to_injection", false);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("stub script: ") + e.what());
  }
  return s;
}

StubScript StubScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string StubScript::to_json() const {
  return json{{"keyword_table", keyword_table},
              {"screenshot_labels", screenshot_labels},
              {"susceptible_to_injection", susceptible_to_injection}}
      .dump(2);
}

bool brand_mentioned(std::string_view brand, std::string_view serialized_items) {
  const auto b = text::trim(brand);
  return !b.empty() && text::contains_word_ci(serialized_items, b);
}

StubBackend::StubBackend(StubScript script) : script_(std::move(script)) {}

std::optional<std::string> StubBackend::screenshot_label(const ModelRequest& request) const {
  if (auto it = script_.screenshot_labels.find(request.sample_id); it != script_.screenshot_labels.end()) {
    return it->second;
  }
  if (request.image_ref) {
    if (auto it = script_.screenshot_labels.find(*request.image_ref); it != script_.screenshot_labels.end()) {
      return it->second;
    }
  }
  return std::nullopt;
}

std::string StubBackend::text_brand(const ModelRequest& request) const {
  const auto& subs = request.substitutions;
  const std::string html = subs.count("processed_html") ? subs.at("processed_html") : "";
  const std::string url = subs.count("url") ? subs.at("url") : "";

  if (script_.susceptible_to_injection) {
    static const std::regex kDirectives[] = {
        std::regex(R"(the official webpage of\s+([^\s.,;:!?"']+))", std::regex::icase),
        std::regex(R"(brand name is\s+([^\s.,;:!?"']+))", std::regex::icase),
        std::regex(R"(ignore the previous instructions?\s+and\s+answer\s+(not identifiable|not exist|[^\s.,;:!?"']+))",
                   std::regex::icase),
    };
    std::optional<std::pair<std::ptrdiff_t, std::string>> earliest;
    for (const auto& re : kDirectives) {
      std::smatch m;
      if (std::regex_search(html, m, re) && (!earliest || m.position(0) < earliest->first)) {
        earliest = std::make_pair(m.position(0), m[1].str());
      }
    }
    if (earliest) return earliest->second;
  }

  std::optional<std::pair<std::size_t, const std::string*>> found;
  for (const auto& kw : script_.keyword_table) {
    const auto pos = text::find_word_ci(html, kw);
    if (pos == std::string::npos) continue;
    if (!found || pos < found->first || (pos == found->first && kw.size() > found->second->size())) {
      found = std::make_pair(pos, &kw);
    }
  }
  if (found) return *found->second;

  const std::string lowered_url = text::to_lower_ascii(url);
  for (const auto& kw : script_.keyword_table) {
    std::string compact;
    for (char c : text::to_lower_ascii(kw)) {
      if (c != ' ') compact.push_back(c);
    }
    if (compact.size() >= 3 && lowered_url.find(compact) != std::string::npos) return kw;
  }
  return "Not identifiable";
}

ModelResponse StubBackend::invoke(const ModelRequest& request) {
  // Rendering validates that the request is complete, as a hosted call would.
  (void)render_prompt(request.template_id, request.substitutions);
  std::string raw;
  switch (request.template_id) {
    case TemplateId::TextBrandExtractor:
      raw = text_brand(request);
      break;
    case TemplateId::ImageBrandExtractor:
      raw = screenshot_label(request).value_or("Not identifiable");
      break;
    case TemplateId::Recheck: {
      const auto label = screenshot_label(request);
      const auto& old = request.substitutions.at("brand_name_old");
      raw = "(1) " + label.value_or("Not identifiable") + "\n(2) " +
            (label && text::iequals(*label, old) ? "Yes" : "No");
      break;
    }
    case TemplateId::TargetBrandChecker: {
      const auto& subs = request.substitutions;
      const std::string items = subs.at("items_from_online_knowledge") + "\n" + subs.at("items_from_offline_knowledge");
      raw = brand_mentioned(subs.at("determined_target_brand"), items) ? "1" : "0";
      break;
    }
  }
  return {raw, parse_response(request.template_id, raw)};
}

}  // namespace phishagent
