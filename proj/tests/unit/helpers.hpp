#pragma once

#include <optional>
#include <random>
#include <sstream>

#include "phishagent/errors.hpp"
#include "phishagent/knowledge_base.hpp"

namespace phishagent::test {

// Kind of the Error thrown by f, or nullopt when it returns normally.
template <class F>
std::optional<ErrorKind> thrown_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline Vector random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(dim);
  for (auto& x : v) x = g(rng);
  return v;
}

inline Brand make_brand(std::string id, std::string name, std::vector<std::string> aliases = {},
                        std::vector<std::string> domains = {}, std::vector<LogoVariant> logos = {}) {
  Brand b;
  b.id = std::move(id);
  b.name = std::move(name);
  b.aliases = std::move(aliases);
  b.domains = std::move(domains);
  b.logo_variants = std::move(logos);
  return b;
}

inline BrandKnowledgeBase parse_bkb_text(const std::string& text) {
  std::istringstream in(text);
  return parse_bkb(in);
}

}  // namespace phishagent::test
