#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "phishagent/embedding_math.hpp"
#include "phishagent/knowledge_base.hpp"
#include "phishagent/retriever.hpp"
#include "phishagent/trainer.hpp"

namespace phishagent::fixtures {

struct SyntheticShape {
  std::size_t brands = 40;
  std::size_t dim = 16;
  std::size_t signal_dims = 8;  // leading dims carry the brand identity
  std::size_t pages_per_brand = 6;
  double signal_noise = 0.05;
  double nuisance_scale = 0.6;
};

/// Brands whose identity lives in the leading dims while every embedding also
/// carries large random components in the trailing dims. A head that
/// suppresses the trailing dims separates the brands perfectly.
struct SyntheticRetrievalSet {
  SyntheticShape shape;
  BrandKnowledgeBase bkb;
  AliasEmbeddings alias;
  std::vector<LabeledWebpage> labeled;
};

SyntheticRetrievalSet make_separable_set(std::uint64_t seed, SyntheticShape shape = {});

/// Random Gaussian head that drowns the identity dims.
ProjectionHead scrambled_head(std::size_t dim, std::size_t signal_dims, std::uint64_t seed);

/// Library defaults scaled to the synthetic set: batch 4 and Adam kept, fewer
/// negatives (the set has fewer variants than 111) and a larger step.
TrainerConfig synthetic_trainer_config(std::uint64_t seed = 7);

void write_synthetic_set(const SyntheticRetrievalSet& set, const std::filesystem::path& dir);

}  // namespace phishagent::fixtures
