#include "phishagent/records.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "phishagent/errors.hpp"
#include "phishagent/text_util.hpp"

namespace phishagent {

using nlohmann::json;

namespace {

Vector float_vector(const json& arr) {
  Vector out;
  out.reserve(arr.size());
  for (const auto& x : arr) out.push_back(static_cast<float>(x.get<double>()));
  return out;
}

json float_array(const Vector& v) {
  json arr = json::array();
  for (double x : v) arr.push_back(static_cast<float>(x));
  return arr;
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

std::string_view to_string(Label label) { return label == Label::Phishing ? "Phishing" : "Benign"; }

Label parse_label(std::string_view s) {
  const auto l = text::to_lower_ascii(text::trim(s));
  if (l == "phishing" || l == "1") return Label::Phishing;
  if (l == "benign" || l == "0") return Label::Benign;
  throw Error(ErrorKind::Parse, "unknown label '" + std::string(s) + "'");
}

std::filesystem::path SampleRecord::resolved_html_path() const {
  const std::filesystem::path p(html_path);
  return p.is_absolute() ? p : base_dir / p;
}

std::optional<std::filesystem::path> SampleRecord::resolved_screenshot_path() const {
  if (!screenshot_path) return std::nullopt;
  const std::filesystem::path p(*screenshot_path);
  return p.is_absolute() ? p : base_dir / p;
}

SampleRecord sample_from_json(const json& j, const std::filesystem::path& base_dir) {
  SampleRecord r;
  try {
    r.sample_id = j.at("sample_id").get<std::string>();
    r.url = j.at("url").get<std::string>();
    r.html_path = j.at("html_path").get<std::string>();
    r.screenshot_path = optional_string(j, "screenshot_path");
    if (j.contains("logo_candidates") && !j.at("logo_candidates").is_null()) {
      for (const auto& c : j.at("logo_candidates")) {
        r.logo_candidates.push_back({float_vector(c.at("embedding")), c.at("confidence").get<double>()});
      }
    }
    if (j.contains("text_embedding") && !j.at("text_embedding").is_null()) {
      r.text_embedding = float_vector(j.at("text_embedding"));
    }
    r.text_hash = optional_string(j, "text_hash");
    if (auto l = optional_string(j, "label")) r.label = parse_label(*l);
    r.target_brand_label = optional_string(j, "target_brand");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("sample record: ") + e.what());
  }
  if (r.sample_id.empty()) throw Error(ErrorKind::Parse, "sample record has an empty sample_id");
  r.base_dir = base_dir;
  return r;
}

json sample_to_json(const SampleRecord& r) {
  json candidates = json::array();
  for (const auto& c : r.logo_candidates) {
    candidates.push_back({{"embedding", float_array(c.embedding)}, {"confidence", c.confidence}});
  }
  json j = {{"sample_id", r.sample_id},
            {"url", r.url},
            {"html_path", r.html_path},
            {"screenshot_path", r.screenshot_path ? json(*r.screenshot_path) : json(nullptr)},
            {"logo_candidates", std::move(candidates)},
            {"text_embedding", r.text_embedding ? float_array(*r.text_embedding) : json(nullptr)}};
  if (r.text_hash) j["text_hash"] = *r.text_hash;
  if (r.label) j["label"] = std::string(to_string(*r.label));
  if (r.target_brand_label) j["target_brand"] = *r.target_brand_label;
  return j;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << content;
}

SampleRecord load_sample(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return sample_from_json(j, path.parent_path());
}

std::vector<SampleRecord> parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  std::vector<SampleRecord> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto where = "manifest line " + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, where + e.what());
    }
    SampleRecord r;
    try {
      r = sample_from_json(j, base_dir);
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, where + e.what());
    }
    if (!ids.insert(r.sample_id).second) throw Error(ErrorKind::Parse, where + "duplicate sample_id '" + r.sample_id + "'");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SampleRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_manifest(in, path.parent_path());
}

void write_manifest(std::ostream& out, const std::vector<SampleRecord>& records) {
  for (const auto& r : records) out << sample_to_json(r).dump() << '\n';
}

void save_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records) {
  std::ostringstream s;
  write_manifest(s, records);
  write_text_file(path, s.str());
}

std::string processed_text_hash(std::string_view processed_text) {
  return "fnv1a64:" + text::hex64(text::fnv1a64(processed_text));
}

RawWebpage load_raw_webpage(const SampleRecord& record) {
  RawWebpage raw;
  raw.sample_id = record.sample_id;
  raw.url = record.url;
  raw.html = read_text_file(record.resolved_html_path());
  if (auto p = record.resolved_screenshot_path()) raw.screenshot_ref = p->string();
  raw.logo_candidates = record.logo_candidates;
  raw.text_embedding = record.text_embedding;
  if (record.text_hash) {
    const auto actual = processed_text_hash(strip_html_to_text(raw.html));
    if (actual != *record.text_hash) {
      throw Error(ErrorKind::Parse, "sample '" + record.sample_id + "': processed text hash " + actual +
                                        " does not match declared " + *record.text_hash);
    }
  }
  return raw;
}

std::vector<LabeledWebpage> parse_labeled_webpages(std::istream& in) {
  std::vector<LabeledWebpage> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      LabeledWebpage page;
      page.sample_id = j.at("sample_id").get<std::string>();
      page.label = j.at("label").get<std::string>();
      page.features.text_embedding = float_vector(j.at("text_embedding"));
      if (j.contains("logo_embedding") && !j.at("logo_embedding").is_null()) {
        page.features.logo_embedding = float_vector(j.at("logo_embedding"));
      }
      out.push_back(std::move(page));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, "labels line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<LabeledWebpage> load_labeled_webpages(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_labeled_webpages(in);
}

void write_labeled_webpages(std::ostream& out, const std::vector<LabeledWebpage>& pages) {
  for (const auto& p : pages) {
    out << json{{"sample_id", p.sample_id},
                {"label", p.label},
                {"text_embedding", float_array(p.features.text_embedding)},
                {"logo_embedding", p.features.logo_embedding ? float_array(*p.features.logo_embedding) : json(nullptr)}}
               .dump()
        << '\n';
  }
}

}  // namespace phishagent
