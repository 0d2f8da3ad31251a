#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phishagent/embedding_math.hpp"
#include "phishagent/knowledge_base.hpp"
#include "phishagent/retriever.hpp"

namespace phishagent {

struct VariantRef {
  std::string brand_id;
  int variant_index = 0;

  auto operator<=>(const VariantRef&) const = default;
};

struct LabeledWebpage {
  std::string sample_id;
  WebpageFeatures features;
  std::string label;
};

struct TrainingPair {
  std::string sample_id;
  WebpageFeatures webpage;
  VariantRef positive;
  std::vector<VariantRef> negatives;
};

enum class OptimizerKind { Sgd, Adam };

struct TrainerConfig {
  std::size_t batch_size = 4;
  double learning_rate = 2e-6;
  std::size_t negatives = 111;
  std::size_t negative_rounds = 2;
  std::size_t epochs = 10;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  double split_ratio = 0.9;
  ModalityWeights weights;

  void validate() const;
  std::string hash() const;
};

struct TrainingSetReport {
  std::size_t labeled = 0;
  std::size_t no_match = 0;
  std::size_t ambiguous = 0;
  std::size_t grounded = 0;
  std::size_t expanded = 0;
  std::size_t total = 0;
  std::size_t train = 0;
  std::size_t validation = 0;
};

struct TrainingSet {
  std::vector<TrainingPair> train;
  std::vector<TrainingPair> validation;
  TrainingSetReport report;
};

/// Grounds labels against the BKB, expands one pair per logo variant, draws
/// cfg.negative_rounds independent negative sets per expanded pair, then
/// shuffles and splits by cfg.split_ratio. Throws EmptyAfterGrounding.
TrainingSet build_training_set(const BrandKnowledgeBase& bkb, const std::vector<LabeledWebpage>& labeled,
                               const TrainerConfig& cfg);

/// -log(softmax(scores)[0]); scores[0] is the positive.
double contrastive_loss(std::span<const double> scores);

/// d loss / d scores = softmax(scores) - e_0.
std::vector<double> loss_gradient(std::span<const double> scores);

struct PairGradient {
  double loss = 0.0;
  ProjectionHead gradient;
};

/// Loss of one training pair under `head` (forward pass only).
double pair_loss(const ProjectionHead& head, const TrainingPair& pair, const BrandKnowledgeBase& bkb,
                 const AliasEmbeddings& alias_embeddings, const ModalityWeights& weights);

/// Loss and its gradient with respect to both projection matrices.
PairGradient pair_loss_and_gradient(const ProjectionHead& head, const TrainingPair& pair,
                                    const BrandKnowledgeBase& bkb, const AliasEmbeddings& alias_embeddings,
                                    const ModalityWeights& weights);

struct Checkpoint {
  ProjectionHead head;
  std::size_t epoch = 0;
  double validation_recall_at_1 = 0.0;
  std::string config_hash;

  bool operator==(const Checkpoint&) const = default;
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double validation_recall_at_1 = 0.0;
};

struct TrainResult {
  Checkpoint best;
  double initial_validation_recall_at_1 = 0.0;
  std::vector<EpochStats> history;
};

double validate_recall_at_1(const ProjectionHead& head, const std::vector<TrainingPair>& validation,
                            const BrandKnowledgeBase& bkb, const AliasEmbeddings& alias_embeddings,
                            const ModalityWeights& weights);

/// Minibatch training of the projection head; keeps the epoch with the best
/// validation recall@1 (earliest on ties). Throws NonFiniteLoss.
TrainResult train(const std::vector<TrainingPair>& train_pairs, const std::vector<TrainingPair>& validation,
                  const BrandKnowledgeBase& bkb, const AliasEmbeddings& alias_embeddings, const TrainerConfig& cfg,
                  std::optional<ProjectionHead> initial_head = std::nullopt);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);

}  // namespace phishagent
