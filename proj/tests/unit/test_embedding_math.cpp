#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "phishagent/embedding_math.hpp"

using namespace phishagent;
using test::thrown_kind;

TEST_CASE("normalize") {
  const auto v = normalize(Vector{3, 4});
  CHECK(v[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(normalize(Vector{1, 0}) == Vector{1, 0});
  CHECK(thrown_kind([] { normalize(Vector{0, 0}); }) == ErrorKind::ZeroVector);
  CHECK(thrown_kind([] { normalize(Vector{1e-13, 0}); }) == ErrorKind::ZeroVector);
}

TEST_CASE("weighted_combine") {
  const Vector t{1, 0}, i{0, 1};
  const auto c = weighted_combine(t, std::span<const double>(i), 1.0, 1.0);
  CHECK(c[0] == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(c[1] == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(weighted_combine(Vector{2, 0}, std::nullopt, 1.0, 1.0) == Vector{1, 0});
  const Vector neg{-1, 0};
  CHECK(thrown_kind([&] { weighted_combine(t, std::span<const double>(neg), 1.0, 1.0); }) == ErrorKind::ZeroVector);
  const Vector shorter{1};
  CHECK(thrown_kind([&] { weighted_combine(t, std::span<const double>(shorter), 1.0, 1.0); }) ==
        ErrorKind::DimensionMismatch);
}

TEST_CASE("project") {
  std::mt19937_64 rng(5);
  ProjectionHead id = ProjectionHead::identity(4);
  const auto v = test::random_vector(rng, 4);
  CHECK(project(id, v, Modality::Text) == v);
  CHECK(project(id, v, Modality::Image) == v);

  ProjectionHead twice = ProjectionHead::identity(2);
  twice.text_matrix(0, 0) = twice.text_matrix(1, 1) = 2.0;
  CHECK(project(twice, Vector{1, 2}, Modality::Text) == Vector{2, 4});
  CHECK(project(twice, Vector{1, 2}, Modality::Image) == Vector{1, 2});
  CHECK(thrown_kind([&] { project(twice, Vector{1, 2, 3}, Modality::Text); }) == ErrorKind::DimensionMismatch);

  // Independent triple-loop oracle.
  for (int trial = 0; trial < 20; ++trial) {
    ProjectionHead h = ProjectionHead::identity(4);
    std::normal_distribution<double> g(0.0, 1.0);
    double ref[4][4];
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) h.image_matrix(r, c) = ref[r][c] = g(rng);
    }
    const auto x = test::random_vector(rng, 4);
    const auto y = project(h, x, Modality::Image);
    for (int r = 0; r < 4; ++r) {
      double s = 0.0;
      for (int c = 0; c < 4; ++c) s += ref[r][c] * x[c];
      CHECK(std::abs(y[r] - s) <= 1e-9);
    }
  }
}

TEST_CASE("property: normalized vectors have unit norm") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> scale(-30.0, 30.0);
  for (int trial = 0; trial < 500; ++trial) {
    auto v = test::random_vector(rng, 1 + rng() % 32);
    const double s = std::pow(10.0, scale(rng) / 3.0);
    for (auto& x : v) x *= s;
    CHECK(std::abs(norm2(normalize(v)) - 1.0) <= 1e-9);
  }
}

TEST_CASE("property: weighted_combine ignores a common positive rescaling of the weights") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng() % 16;
    const auto t = test::random_vector(rng, d);
    const auto i = test::random_vector(rng, d);
    const double ct = u(rng), ci = u(rng), f = u(rng);
    const auto a = weighted_combine(t, std::span<const double>(i), ct, ci);
    const auto b = weighted_combine(t, std::span<const double>(i), f * ct, f * ci);
    for (std::size_t k = 0; k < d; ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-9);
  }
}

TEST_CASE("non-finite components are rejected") {
  const Vector bad{1.0, std::nan("")};
  CHECK(thrown_kind([&] { require_finite(bad, "test"); }) == ErrorKind::InvalidArgument);
}
