#include "phishagent/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "phishagent/errors.hpp"
#include "phishagent/text_util.hpp"

namespace phishagent {

using nlohmann::json;

void TrainerConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");
  if (negatives < 1) throw Error(ErrorKind::InvalidArgument, "negatives must be >= 1");
  if (negative_rounds < 1) throw Error(ErrorKind::InvalidArgument, "negative_rounds must be >= 1");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw Error(ErrorKind::InvalidArgument, "split_ratio must be in (0,1)");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::InvalidArgument, "learning_rate must be positive");
  }
}

std::string TrainerConfig::hash() const {
  std::ostringstream s;
  s.precision(17);
  s << batch_size << '|' << learning_rate << '|' << negatives << '|' << negative_rounds << '|' << epochs << '|'
    << (optimizer == OptimizerKind::Adam ? "adam" : "sgd") << '|' << adam_beta1 << '|' << adam_beta2 << '|'
    << adam_epsilon << '|' << seed << '|' << split_ratio << '|' << weights.webpage_text << '|'
    << weights.webpage_image << '|' << weights.brand_text << '|' << weights.brand_image;
  return text::hex64(text::fnv1a64(s.str()));
}

TrainingSet build_training_set(const BrandKnowledgeBase& bkb, const std::vector<LabeledWebpage>& labeled,
                               const TrainerConfig& cfg) {
  cfg.validate();
  if (labeled.empty()) throw Error(ErrorKind::InvalidArgument, "no labeled webpages");

  TrainingSet set;
  auto& report = set.report;
  report.labeled = labeled.size();

  struct Grounded {
    const LabeledWebpage* page;
    const Brand* brand;
  };
  std::vector<Grounded> grounded;
  for (const auto& page : labeled) {
    const auto result = bkb.ground_label(page.label);
    if (const auto* m = std::get_if<grounding::Matched>(&result)) {
      grounded.push_back({&page, &bkb.at(m->brand_id)});
    } else if (std::holds_alternative<grounding::NoMatch>(result)) {
      ++report.no_match;
    } else {
      ++report.ambiguous;
    }
  }
  report.grounded = grounded.size();
  if (grounded.empty()) throw Error(ErrorKind::EmptyAfterGrounding, "no label matched exactly one brand");

  std::vector<VariantRef> pool;
  for (const auto& b : bkb.brands()) {
    for (int v : indexed_variants(b)) pool.push_back({b.id, v});
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<TrainingPair> all;
  for (const auto& g : grounded) {
    std::vector<VariantRef> candidates;
    for (const auto& ref : pool) {
      if (ref.brand_id != g.brand->id) candidates.push_back(ref);
    }
    if (candidates.size() < cfg.negatives) {
      throw Error(ErrorKind::InvalidArgument, "BKB has " + std::to_string(candidates.size()) +
                                                  " negative candidates for brand '" + g.brand->id + "', need " +
                                                  std::to_string(cfg.negatives));
    }
    for (int variant : indexed_variants(*g.brand)) {
      ++report.expanded;
      for (std::size_t round = 0; round < cfg.negative_rounds; ++round) {
        // Partial Fisher-Yates: the first N slots become a uniform sample
        // without replacement.
        for (std::size_t i = 0; i < cfg.negatives; ++i) {
          std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
          std::swap(candidates[i], candidates[pick(rng)]);
        }
        TrainingPair pair;
        pair.sample_id = g.page->sample_id;
        pair.webpage = g.page->features;
        pair.positive = {g.brand->id, variant};
        pair.negatives.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(cfg.negatives));
        all.push_back(std::move(pair));
      }
    }
  }
  report.total = all.size();

  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  auto n_train = static_cast<std::size_t>(std::floor(cfg.split_ratio * static_cast<double>(all.size()) + 1e-9));
  if (all.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, all.size() - 1);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? set.train : set.validation).push_back(std::move(all[order[i]]));
  }
  report.train = set.train.size();
  report.validation = set.validation.size();
  return set;
}

double contrastive_loss(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorKind::InvalidArgument, "empty score vector");
  const double m = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - m);
  return std::max(0.0, std::log(sum) - (scores[0] - m));
}

std::vector<double> loss_gradient(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorKind::InvalidArgument, "empty score vector");
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> g(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    g[i] = std::exp(scores[i] - m);
    sum += g[i];
  }
  for (double& x : g) x /= sum;
  g[0] -= 1.0;
  return g;
}

namespace {

struct Candidate {
  const Vector* text;
  const Vector* logo;
};

Candidate resolve(const VariantRef& ref, const BrandKnowledgeBase& bkb, const AliasEmbeddings& alias_embeddings) {
  const Brand& brand = bkb.at(ref.brand_id);
  auto it = alias_embeddings.find(ref.brand_id);
  if (it == alias_embeddings.end()) {
    throw Error(ErrorKind::InvalidArgument, "no alias text embedding for brand '" + ref.brand_id + "'");
  }
  const Vector* logo = nullptr;
  if (!brand.logo_variants.empty()) {
    const LogoVariant* v = brand.find_variant(ref.variant_index);
    if (!v) throw Error(ErrorKind::UnknownVariant, "brand '" + ref.brand_id + "' has no variant " + std::to_string(ref.variant_index));
    logo = &v->embedding;
  } else if (ref.variant_index != kTextOnlyVariant) {
    throw Error(ErrorKind::UnknownVariant, "brand '" + ref.brand_id + "' has no variant " + std::to_string(ref.variant_index));
  }
  return {&it->second, logo};
}

// Pre-normalization combination c_t*T*text + c_i*I*image.
Vector combine_raw(const ProjectionHead& head, const Vector& text, const Vector* image, double c_text, double c_image) {
  Vector u = matvec(head.text_matrix, text);
  for (double& x : u) x *= c_text;
  if (image) {
    const Vector p = matvec(head.image_matrix, *image);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += c_image * p[i];
  }
  return u;
}

// Accumulates scale * g * x^T into m.
void add_outer(Matrix& m, double scale, std::span<const double> g, std::span<const double> x) {
  const std::size_t d = m.dim();
  auto data = m.data();
  for (std::size_t r = 0; r < d; ++r) {
    const double gr = scale * g[r];
    if (gr == 0.0) continue;
    for (std::size_t c = 0; c < d; ++c) data[r * d + c] += gr * x[c];
  }
}

}  // namespace

double pair_loss(const ProjectionHead& head, const TrainingPair& pair, const BrandKnowledgeBase& bkb,
                 const AliasEmbeddings& alias_embeddings, const ModalityWeights& weights) {
  const Vector query = encode_webpage(pair.webpage, head, weights);
  std::vector<double> scores;
  scores.reserve(pair.negatives.size() + 1);
  auto score_of = [&](const VariantRef& ref) {
    const Brand& brand = bkb.at(ref.brand_id);
    return dot(query, encode_brand(brand, ref.variant_index, alias_embeddings.at(ref.brand_id), head, weights));
  };
  scores.push_back(score_of(pair.positive));
  for (const auto& neg : pair.negatives) scores.push_back(score_of(neg));
  return contrastive_loss(scores);
}

PairGradient pair_loss_and_gradient(const ProjectionHead& head, const TrainingPair& pair,
                                    const BrandKnowledgeBase& bkb, const AliasEmbeddings& alias_embeddings,
                                    const ModalityWeights& weights) {
  const std::size_t d = head.dim();
  const Vector* page_logo = pair.webpage.logo_embedding ? &*pair.webpage.logo_embedding : nullptr;
  const Vector u = combine_raw(head, pair.webpage.text_embedding, page_logo, weights.webpage_text, weights.webpage_image);
  const double u_norm = norm2(u);
  if (!(u_norm >= 1e-12)) throw Error(ErrorKind::ZeroVector, "webpage encoding vanished");
  Vector e_w = u;
  for (double& x : e_w) x /= u_norm;

  std::vector<Candidate> cands;
  cands.reserve(pair.negatives.size() + 1);
  cands.push_back(resolve(pair.positive, bkb, alias_embeddings));
  for (const auto& n : pair.negatives) cands.push_back(resolve(n, bkb, alias_embeddings));

  std::vector<Vector> e_b(cands.size());
  std::vector<double> v_norm(cands.size());
  std::vector<double> scores(cands.size());
  for (std::size_t j = 0; j < cands.size(); ++j) {
    Vector v = combine_raw(head, *cands[j].text, cands[j].logo, weights.brand_text, weights.brand_image);
    v_norm[j] = norm2(v);
    if (!(v_norm[j] >= 1e-12)) throw Error(ErrorKind::ZeroVector, "brand encoding vanished");
    for (double& x : v) x /= v_norm[j];
    scores[j] = dot(e_w, v);
    e_b[j] = std::move(v);
  }

  PairGradient out;
  out.loss = contrastive_loss(scores);
  out.gradient = {Matrix(d), Matrix(d)};
  const auto g_s = loss_gradient(scores);

  // Webpage side: dL/de_w = sum_j g_j e_j, projected onto the tangent of the
  // unit sphere and scaled by 1/|u|.
  Vector g_ew(d, 0.0);
  for (std::size_t j = 0; j < cands.size(); ++j) {
    for (std::size_t i = 0; i < d; ++i) g_ew[i] += g_s[j] * e_b[j][i];
  }
  const double radial = dot(g_ew, e_w);
  Vector g_u(d);
  for (std::size_t i = 0; i < d; ++i) g_u[i] = (g_ew[i] - radial * e_w[i]) / u_norm;
  add_outer(out.gradient.text_matrix, weights.webpage_text, g_u, pair.webpage.text_embedding);
  if (page_logo) add_outer(out.gradient.image_matrix, weights.webpage_image, g_u, *page_logo);

  // Brand side: dL/de_j = g_j e_w.
  Vector g_v(d);
  for (std::size_t j = 0; j < cands.size(); ++j) {
    if (g_s[j] == 0.0) continue;
    for (std::size_t i = 0; i < d; ++i) g_v[i] = g_s[j] * (e_w[i] - scores[j] * e_b[j][i]) / v_norm[j];
    add_outer(out.gradient.text_matrix, weights.brand_text, g_v, *cands[j].text);
    if (cands[j].logo) add_outer(out.gradient.image_matrix, weights.brand_image, g_v, *cands[j].logo);
  }
  return out;
}

double validate_recall_at_1(const ProjectionHead& head, const std::vector<TrainingPair>& validation,
                            const BrandKnowledgeBase& bkb, const AliasEmbeddings& alias_embeddings,
                            const ModalityWeights& weights) {
  if (validation.empty()) throw Error(ErrorKind::InvalidArgument, "empty validation set");
  const auto index = BrandIndex::build(bkb, alias_embeddings, head, weights);
  std::size_t correct = 0;
  for (const auto& pair : validation) {
    const auto hits = index.retrieve_top_k(encode_webpage(pair.webpage, head, weights), 1);
    if (!hits.empty() && hits.front().brand_id == pair.positive.brand_id) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(validation.size());
}

namespace {

class Optimizer {
 public:
  Optimizer(const TrainerConfig& cfg, std::size_t params) : cfg_(cfg), m_(params, 0.0), v_(params, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    if (cfg_.optimizer == OptimizerKind::Sgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg_.learning_rate * grad[i];
      return;
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.adam_beta1 * m_[i] + (1.0 - cfg_.adam_beta1) * grad[i];
      v_[i] = cfg_.adam_beta2 * v_[i] + (1.0 - cfg_.adam_beta2) * grad[i] * grad[i];
      const double m_hat = m_[i] / bc1;
      const double v_hat = v_[i] / bc2;
      params[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.adam_epsilon);
    }
  }

 private:
  const TrainerConfig& cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

std::vector<double> flatten(const ProjectionHead& h) {
  std::vector<double> out(h.text_matrix.data().begin(), h.text_matrix.data().end());
  out.insert(out.end(), h.image_matrix.data().begin(), h.image_matrix.data().end());
  return out;
}

void unflatten(std::span<const double> flat, ProjectionHead& h) {
  const std::size_t n = h.text_matrix.data().size();
  std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(n), h.text_matrix.data().begin());
  std::copy(flat.begin() + static_cast<std::ptrdiff_t>(n), flat.end(), h.image_matrix.data().begin());
}

}  // namespace

TrainResult train(const std::vector<TrainingPair>& train_pairs, const std::vector<TrainingPair>& validation,
                  const BrandKnowledgeBase& bkb, const AliasEmbeddings& alias_embeddings, const TrainerConfig& cfg,
                  std::optional<ProjectionHead> initial_head) {
  cfg.validate();
  if (train_pairs.empty() || validation.empty()) {
    throw Error(ErrorKind::InvalidArgument, "training and validation sets must be non-empty");
  }
  ProjectionHead head = initial_head ? std::move(*initial_head) : ProjectionHead::identity(bkb.dimension());
  if (head.dim() != bkb.dimension()) throw Error(ErrorKind::DimensionMismatch, "initial head dimension");

  TrainResult result;
  result.initial_validation_recall_at_1 = validate_recall_at_1(head, validation, bkb, alias_embeddings, cfg.weights);

  std::vector<double> params = flatten(head);
  Optimizer opt(cfg, params.size());
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(params.size());

  bool have_best = false;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const auto pg = pair_loss_and_gradient(head, train_pairs[order[i]], bkb, alias_embeddings, cfg.weights);
        batch_loss += pg.loss;
        const auto gt = pg.gradient.text_matrix.data();
        const auto gi = pg.gradient.image_matrix.data();
        for (std::size_t p = 0; p < gt.size(); ++p) grad[p] += inv * gt[p];
        for (std::size_t p = 0; p < gi.size(); ++p) grad[gt.size() + p] += inv * gi[p];
      }
      batch_loss *= inv;
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorKind::NonFiniteLoss,
                    "epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_index));
      }
      loss_sum += batch_loss * static_cast<double>(end - start);
      opt.step(params, grad);
      // Past this magnitude squared norms overflow and encodings stop being finite.
      for (double x : params) {
        if (!(std::abs(x) < 1e150)) {
          throw Error(ErrorKind::NonFiniteLoss, "epoch " + std::to_string(epoch) + " batch " +
                                                    std::to_string(batch_index) + ": parameters diverged");
        }
      }
      unflatten(params, head);
    }
    const double recall = validate_recall_at_1(head, validation, bkb, alias_embeddings, cfg.weights);
    result.history.push_back({epoch, loss_sum / static_cast<double>(order.size()), recall});
    if (!have_best || recall > result.best.validation_recall_at_1) {
      result.best = {head, epoch, recall, cfg.hash()};
      have_best = true;
    }
  }
  if (!have_best) result.best = {head, 0, result.initial_validation_recall_at_1, cfg.hash()};
  return result;
}

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.dim(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.dim(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows) {
  Matrix m(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.size()) throw Error(ErrorKind::Parse, "checkpoint matrix is not square");
    for (std::size_t c = 0; c < rows.size(); ++c) m(r, c) = rows[r][c].get<double>();
  }
  return m;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
  const json j = {{"format_version", 1},
                  {"dimension", checkpoint.head.dim()},
                  {"text_matrix", matrix_json(checkpoint.head.text_matrix)},
                  {"image_matrix", matrix_json(checkpoint.head.image_matrix)},
                  {"epoch", checkpoint.epoch},
                  {"validation_recall_at_1", checkpoint.validation_recall_at_1},
                  {"config_hash", checkpoint.config_hash}};
  return j.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    Checkpoint c;
    c.head.text_matrix = matrix_from_json(j.at("text_matrix"));
    c.head.image_matrix = matrix_from_json(j.at("image_matrix"));
    if (c.head.text_matrix.dim() != c.head.image_matrix.dim() ||
        c.head.text_matrix.dim() != j.at("dimension").get<std::size_t>()) {
      throw Error(ErrorKind::DimensionMismatch, "checkpoint matrices disagree on dimension");
    }
    c.epoch = j.at("epoch").get<std::size_t>();
    c.validation_recall_at_1 = j.at("validation_recall_at_1").get<double>();
    c.config_hash = j.value("config_hash", "");
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << checkpoint_to_json(checkpoint) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace phishagent
