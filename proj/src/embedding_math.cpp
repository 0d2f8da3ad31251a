#include "phishagent/embedding_math.hpp"

#include <cmath>
#include <string>

#include "phishagent/errors.hpp"

namespace phishagent {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

ModalityWeights ModalityWeights::scaled(double factor) const {
  return {webpage_text * factor, webpage_image * factor, brand_text * factor,
          brand_image * factor};
}

Matrix::Matrix(std::size_t dim, double fill) : dim_(dim), data_(dim * dim, fill) {}

Matrix Matrix::identity(std::size_t dim) {
  Matrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

ProjectionHead ProjectionHead::identity(std::size_t dim) {
  return {Matrix::identity(dim), Matrix::identity(dim)};
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a.size(), b.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vector normalize(std::span<const double> v) {
  const double n = norm2(v);
  if (!(n >= 1e-12)) throw Error(ErrorKind::ZeroVector, "cannot normalize a zero vector");
  if (!std::isfinite(n)) throw Error(ErrorKind::InvalidArgument, "cannot normalize a non-finite vector");
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

Vector weighted_combine(std::span<const double> text, std::optional<std::span<const double>> image,
                        double c_text, double c_image) {
  Vector sum(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) sum[i] = c_text * text[i];
  if (image) {
    require_same_dim(text.size(), image->size(), "weighted_combine");
    for (std::size_t i = 0; i < text.size(); ++i) sum[i] += c_image * (*image)[i];
  }
  return normalize(sum);
}

Vector matvec(const Matrix& m, std::span<const double> v) {
  require_same_dim(m.dim(), v.size(), "matvec");
  const std::size_t d = m.dim();
  Vector out(d, 0.0);
  const auto data = m.data();
  for (std::size_t r = 0; r < d; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) acc += data[r * d + c] * v[c];
    out[r] = acc;
  }
  return out;
}

Vector project(const ProjectionHead& head, std::span<const double> v, Modality modality) {
  return matvec(modality == Modality::Text ? head.text_matrix : head.image_matrix, v);
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, std::string(what) + " has a non-finite component");
  }
}

}  // namespace phishagent
