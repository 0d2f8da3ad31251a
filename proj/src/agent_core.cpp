#include "phishagent/agent_core.hpp"

#include <chrono>

#include "phishagent/errors.hpp"
#include "phishagent/text_util.hpp"

namespace phishagent {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

class Stopwatch {
 public:
  double ms() const { return std::chrono::duration<double, std::milli>(Clock::now() - start_).count(); }

 private:
  Clock::time_point start_ = Clock::now();
};

template <class F>
auto run_stage(std::string_view stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error::wrap(e, "stage " + std::string(stage));
  }
}

std::string_view strip_www(std::string_view host) {
  return host.rfind("www.", 0) == 0 ? host.substr(4) : host;
}

void add_domains(std::set<std::string>& out, const std::vector<SearchResultItem>& items) {
  for (const auto& it : items) out.insert(it.domain);
}

void add_domains(std::set<std::string>& out, const std::vector<OfflineBrand>& r_offl) {
  for (const auto& o : r_offl) {
    if (o.brand) out.insert(o.brand->domains.begin(), o.brand->domains.end());
  }
}

constexpr std::string_view kSearchComponents[] = {"domain_query", "brand_query", "recheck_brand_query"};
constexpr std::string_view kModelComponents[] = {"text_brand_extractor", "image_brand_extractor", "recheck"};

}  // namespace

std::string_view to_string(DecidedBy d) {
  switch (d) {
    case DecidedBy::DomainChecker: return "DomainChecker";
    case DecidedBy::TargetBrandChecker: return "TargetBrandChecker";
    case DecidedBy::MbeNotIdentifiable: return "MBE-NotIdentifiable";
    case DecidedBy::Recheck: return "Recheck";
    case DecidedBy::FinalRule: return "FinalRule";
  }
  return "?";
}

DecidedBy parse_decided_by(std::string_view s) {
  for (auto d : {DecidedBy::DomainChecker, DecidedBy::TargetBrandChecker, DecidedBy::MbeNotIdentifiable,
                 DecidedBy::Recheck, DecidedBy::FinalRule}) {
    if (to_string(d) == s) return d;
  }
  throw Error(ErrorKind::Parse, "unknown decided_by '" + std::string(s) + "'");
}

void AblationFlags::validate() const {
  if (tbe && ibe) throw Error(ErrorKind::InvalidArgument, "cannot disable both brand extractors");
}

void AblationFlags::disable(std::string_view component) {
  const auto c = text::to_lower_ascii(component);
  if (c == "offline") offline = true;
  else if (c == "online") online = true;
  else if (c == "domain-query" || c == "domain_query") domain_query = true;
  else if (c == "brand-query" || c == "brand_query") brand_query = true;
  else if (c == "recheck") recheck = true;
  else if (c == "tbe") tbe = true;
  else if (c == "ibe") ibe = true;
  else throw Error(ErrorKind::InvalidArgument, "unknown ablation component '" + std::string(component) + "'");
}

std::vector<std::string> AblationFlags::disabled() const {
  std::vector<std::string> out;
  if (offline) out.emplace_back("offline");
  if (online) out.emplace_back("online");
  if (domain_query) out.emplace_back("domain-query");
  if (brand_query) out.emplace_back("brand-query");
  if (recheck) out.emplace_back("recheck");
  if (tbe) out.emplace_back("tbe");
  if (ibe) out.emplace_back("ibe");
  return out;
}

bool Verdict::same_decision(const Verdict& other) const {
  if (sample_id != other.sample_id || label != other.label || target_brand != other.target_brand ||
      decided_by != other.decided_by || trail.size() != other.trail.size()) {
    return false;
  }
  for (std::size_t i = 0; i < trail.size(); ++i) {
    if (trail[i].component != other.trail[i].component || trail[i].decision != other.trail[i].decision) return false;
  }
  return true;
}

json verdict_to_json(const Verdict& v, bool include_timings) {
  json trail = json::array();
  for (const auto& t : v.trail) {
    json e = {{"component", t.component}, {"decision", t.decision}};
    if (include_timings) e["ms"] = t.ms;
    trail.push_back(std::move(e));
  }
  json j = {{"sample_id", v.sample_id},
            {"label", std::string(to_string(v.label))},
            {"target_brand", v.target_brand ? json(*v.target_brand) : json(nullptr)},
            {"decided_by", std::string(to_string(v.decided_by))},
            {"trail", std::move(trail)}};
  if (include_timings) j["total_ms"] = v.total_ms;
  return j;
}

Verdict verdict_from_json(const json& j) {
  Verdict v;
  try {
    v.sample_id = j.at("sample_id").get<std::string>();
    v.label = parse_label(j.at("label").get<std::string>());
    if (!j.at("target_brand").is_null()) v.target_brand = j.at("target_brand").get<std::string>();
    v.decided_by = parse_decided_by(j.at("decided_by").get<std::string>());
    for (const auto& t : j.at("trail")) {
      v.trail.push_back({t.at("component").get<std::string>(), t.at("decision").get<std::string>(), t.value("ms", 0.0)});
    }
    v.total_ms = j.value("total_ms", 0.0);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("verdict: ") + e.what());
  }
  return v;
}

std::size_t search_calls(const Verdict& v) {
  std::size_t n = 0;
  for (const auto& t : v.trail) {
    for (auto c : kSearchComponents) n += t.component == c;
  }
  return n;
}

std::size_t model_calls(const Verdict& v) {
  std::size_t n = 0;
  for (const auto& t : v.trail) {
    for (auto c : kModelComponents) n += t.component == c && t.decision.rfind("skipped", 0) != 0;
    if (t.component.find("target_brand_checker") != std::string::npos && t.decision.rfind("llm", 0) == 0) ++n;
  }
  return n;
}

std::vector<BrandListing> offline_listings(const std::vector<OfflineBrand>& r_offl) {
  std::vector<BrandListing> out;
  for (const auto& o : r_offl) {
    if (o.brand) out.push_back({o.brand->name, o.brand->aliases});
  }
  return out;
}

bool check_domain(std::string_view domain, const std::set<std::string>& domains, bool www_normalization) {
  if (domains.count(std::string(domain))) return true;
  if (!www_normalization) return false;
  const auto bare = strip_www(domain);
  for (const auto& d : domains) {
    if (strip_www(d) == bare) return true;
  }
  return false;
}

bool brand_in_knowledge(std::string_view brand, const std::vector<SearchResultItem>& r_onl,
                        const std::vector<OfflineBrand>& r_offl) {
  const auto b = text::trim(brand);
  if (b.empty()) return false;
  for (const auto& o : r_offl) {
    if (!o.brand) continue;
    if (text::contains_word_ci(o.brand->name, b)) return true;
    for (const auto& a : o.brand->aliases) {
      if (text::contains_word_ci(a, b)) return true;
    }
  }
  for (const auto& it : r_onl) {
    if (text::contains_word_ci(it.title, b) || text::contains_word_ci(it.snippet, b) ||
        text::contains_word_ci(it.domain, b)) {
      return true;
    }
  }
  return false;
}

Detector::Detector(DetectorDeps deps, DetectorConfig config) : deps_(std::move(deps)), config_(config) {
  const auto& f = config_.ablation;
  f.validate();
  if (config_.top_k == 0 || config_.search_k == 0) throw Error(ErrorKind::InvalidArgument, "k must be at least 1");
  if (!f.offline && (!deps_.bkb || !deps_.index)) {
    throw Error(ErrorKind::InvalidArgument, "offline module needs a BKB and a brand index");
  }
  if (!f.online && !deps_.search) throw Error(ErrorKind::InvalidArgument, "online module needs a search client");
  if (!f.tbe && !deps_.llm) throw Error(ErrorKind::InvalidArgument, "text brand extractor needs an LLM backend");
  if ((!f.ibe || !f.recheck) && !deps_.mllm) throw Error(ErrorKind::InvalidArgument, "image stages need an MLLM backend");
  if (config_.tbc_mode == TbcMode::Llm && !deps_.llm) {
    throw Error(ErrorKind::InvalidArgument, "LLM target brand checker needs an LLM backend");
  }
  if (deps_.bkb) bkb_domains_ = deps_.bkb->all_known_domains();
}

std::vector<SearchResultItem> Detector::search(DetectionContext& ctx, std::string_view component,
                                               const std::string& q) const {
  Stopwatch sw;
  auto items = run_stage(component, [&] { return deps_.search->query(q, config_.search_k); });
  ctx.trail.push_back({std::string(component), "q=\"" + q + "\" -> " + std::to_string(items.size()) + " results", sw.ms()});
  return items;
}

BrandExtraction Detector::extract_brand(DetectionContext& ctx) const {
  const auto& f = config_.ablation;
  const auto& page = ctx.page;
  if (!f.tbe) {
    Stopwatch sw;
    ModelRequest req;
    req.template_id = TemplateId::TextBrandExtractor;
    req.sample_id = page.sample_id;
    req.substitutions = {{"url", page.url},
                         {"processed_html", page.processed_html},
                         {"top_k_brands_from_offline_knowledge_base", serialize_brand_list(offline_listings(ctx.r_offl))}};
    auto res = run_stage("text_brand_extractor", [&] { return deps_.llm->invoke(req); });
    const auto* name = std::get_if<parsed::BrandName>(&res.parsed);
    ctx.trail.push_back({"text_brand_extractor", name ? "brand=" + name->name : "Not identifiable", sw.ms()});
    if (name) return {name->name, false};
  }
  if (f.ibe) return {std::nullopt, false};

  Stopwatch sw;
  if (!page.screenshot_ref) {
    ctx.trail.push_back({"image_brand_extractor", "skipped: warning: no screenshot", sw.ms()});
    return {std::nullopt, true};
  }
  ModelRequest req;
  req.template_id = TemplateId::ImageBrandExtractor;
  req.sample_id = page.sample_id;
  req.image_ref = page.screenshot_ref;
  auto res = run_stage("image_brand_extractor", [&] { return deps_.mllm->invoke(req); });
  const auto* name = std::get_if<parsed::BrandName>(&res.parsed);
  ctx.trail.push_back({"image_brand_extractor", name ? "brand=" + name->name : "Not identifiable", sw.ms()});
  if (name) return {name->name, true};
  return {std::nullopt, true};
}

bool Detector::check_target_brand(std::string_view brand, const std::vector<SearchResultItem>& r_onl,
                                  const std::vector<OfflineBrand>& r_offl, std::vector<TrailEntry>& trail,
                                  std::string_view component) const {
  Stopwatch sw;
  if (text::trim(brand).empty()) {
    trail.push_back({std::string(component), "deterministic: not found (warning: empty brand)", sw.ms()});
    return false;
  }
  if (config_.tbc_mode == TbcMode::Llm) {
    ModelRequest req;
    req.template_id = TemplateId::TargetBrandChecker;
    req.substitutions = {{"items_from_online_knowledge", serialize_search_items(r_onl)},
                         {"items_from_offline_knowledge", serialize_brand_list(offline_listings(r_offl))},
                         {"determined_target_brand", std::string(brand)}};
    try {
      const auto res = deps_.llm->invoke(req);
      const bool found = std::get<parsed::Binary01>(res.parsed).value;
      trail.push_back({std::string(component), found ? "llm: found" : "llm: not found", sw.ms()});
      return found;
    } catch (const Error& e) {
      const bool found = brand_in_knowledge(brand, r_onl, r_offl);
      trail.push_back({std::string(component),
                       std::string("deterministic: ") + (found ? "found" : "not found") +
                           " (llm failed: " + std::string(to_string(e.kind())) + ")",
                       sw.ms()});
      return found;
    }
  }
  const bool found = brand_in_knowledge(brand, r_onl, r_offl);
  trail.push_back({std::string(component), found ? "deterministic: found" : "deterministic: not found", sw.ms()});
  return found;
}

Verdict Detector::recheck(DetectionContext& ctx, const std::string& old_brand) const {
  Stopwatch sw;
  ModelRequest req;
  req.template_id = TemplateId::Recheck;
  req.sample_id = ctx.page.sample_id;
  req.image_ref = ctx.page.screenshot_ref;
  req.substitutions = {{"brand_name_old", old_brand}};
  const auto res = run_stage("recheck", [&] { return deps_.mllm->invoke(req); });
  auto pair = std::get<parsed::RecheckPair>(res.parsed);
  if (pair.same_old) pair.brand = old_brand;

  Verdict v;
  v.decided_by = DecidedBy::Recheck;
  if (pair.same_old) {
    ctx.trail.push_back({"recheck", "same brand as before: " + old_brand, sw.ms()});
    return v;
  }
  if (!pair.brand) {
    ctx.trail.push_back({"recheck", "Not identifiable", sw.ms()});
    return v;
  }
  const std::string new_brand = *pair.brand;
  ctx.trail.push_back({"recheck", "new brand=" + new_brand, sw.ms()});

  const auto& f = config_.ablation;
  std::vector<SearchResultItem> r_onl_new = ctx.r_domain;
  if (!f.online && !f.brand_query) {
    r_onl_new = union_results(ctx.r_domain, search(ctx, "recheck_brand_query", new_brand));
  }
  std::set<std::string> d_comb_new;
  add_domains(d_comb_new, r_onl_new);
  add_domains(d_comb_new, ctx.r_offl);

  Stopwatch dc;
  const bool domain_found = check_domain(ctx.page.domain, d_comb_new, config_.www_normalization);
  ctx.trail.push_back({"recheck_domain_check", domain_found ? "domain found" : "domain not found", dc.ms()});
  if (domain_found) {
    v.decided_by = DecidedBy::DomainChecker;
    return v;
  }
  if (check_target_brand(new_brand, r_onl_new, ctx.r_offl, ctx.trail, "recheck_target_brand_checker")) {
    v.label = Label::Phishing;
    v.target_brand = new_brand;
  }
  return v;
}

Verdict Detector::detect(const RawWebpage& raw) const {
  Stopwatch total;
  DetectionContext ctx;
  Verdict verdict;
  verdict.sample_id = raw.sample_id;
  auto finish = [&](Label label, DecidedBy by, std::optional<std::string> target) {
    verdict.label = label;
    verdict.decided_by = by;
    verdict.target_brand = std::move(target);
    verdict.trail = std::move(ctx.trail);
    verdict.total_ms = total.ms();
    return verdict;
  };
  const auto& f = config_.ablation;

  {
    Stopwatch sw;
    ctx.page = run_stage("preprocess", [&] { return preprocess(raw); });
    ctx.trail.push_back({"preprocess", "domain=" + ctx.page.domain, sw.ms()});
  }
  const auto& domain = ctx.page.domain;

  if (!f.offline) {
    Stopwatch sw;
    if (ctx.page.text_embedding) {
      const WebpageFeatures features{*ctx.page.text_embedding, ctx.page.identity_logo};
      const auto hits = run_stage("offline_retrieval", [&] {
        return deps_.index->retrieve_top_k(encode_webpage(features, deps_.head, deps_.weights), config_.top_k);
      });
      std::string ids;
      for (const auto& h : hits) {
        ctx.r_offl.push_back({h, deps_.bkb->find(h.brand_id)});
        ids += (ids.empty() ? "" : ",") + h.brand_id;
      }
      ctx.trail.push_back({"offline_retrieval", "top-k=[" + ids + "]", sw.ms()});
    } else {
      ctx.trail.push_back({"offline_retrieval", "skipped: warning: no text embedding", sw.ms()});
    }
    add_domains(ctx.d_comb, ctx.r_offl);

    Stopwatch dc;
    const bool known = check_domain(domain, bkb_domains_, config_.www_normalization);
    ctx.trail.push_back({"offline_domain_check", known ? "domain in BKB" : "domain not in BKB", dc.ms()});
    if (known) return finish(Label::Benign, DecidedBy::DomainChecker, std::nullopt);
  }

  if (!f.online && !f.domain_query) {
    ctx.r_domain = search(ctx, "domain_query", domain);
    add_domains(ctx.d_comb, ctx.r_domain);
    Stopwatch dc;
    const bool found = check_domain(domain, ctx.d_comb, config_.www_normalization);
    ctx.trail.push_back({"domain_check", found ? "domain found" : "domain not found", dc.ms()});
    if (found) return finish(Label::Benign, DecidedBy::DomainChecker, std::nullopt);
  }

  const auto extraction = extract_brand(ctx);
  if (!extraction.brand) return finish(Label::Benign, DecidedBy::MbeNotIdentifiable, std::nullopt);
  const std::string& brand = *extraction.brand;
  ctx.target_brand = brand;

  std::vector<SearchResultItem> r_brand;
  if (!f.online && !f.brand_query) r_brand = search(ctx, "brand_query", brand);
  ctx.r_onl = union_results(ctx.r_domain, r_brand);
  add_domains(ctx.d_comb, ctx.r_onl);

  {
    Stopwatch dc;
    const bool found = check_domain(domain, ctx.d_comb, config_.www_normalization);
    ctx.trail.push_back({"domain_check", found ? "domain found" : "domain not found", dc.ms()});
    if (found) return finish(Label::Benign, DecidedBy::DomainChecker, brand);
  }

  if (check_target_brand(brand, ctx.r_onl, ctx.r_offl, ctx.trail)) {
    return finish(Label::Phishing, DecidedBy::TargetBrandChecker, brand);
  }

  if (!f.recheck && !extraction.used_ibe) {
    if (!ctx.page.screenshot_ref) {
      ctx.trail.push_back({"recheck", "skipped: warning: no screenshot", 0.0});
    } else {
      const auto v = recheck(ctx, brand);
      return finish(v.label, v.decided_by, v.label == Label::Phishing ? v.target_brand : brand);
    }
  }
  return finish(Label::Benign, DecidedBy::FinalRule, brand);
}

}  // namespace phishagent
