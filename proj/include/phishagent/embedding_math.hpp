#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace phishagent {

using Vector = std::vector<double>;

enum class Modality { Text, Image };

/// Weight constants of the webpage (w) and brand (b) encoders.
struct ModalityWeights {
  double webpage_text = 1.0;
  double webpage_image = 1.0;
  double brand_text = 1.0;
  double brand_image = 1.0;

  ModalityWeights scaled(double factor) const;
};

/// Dense square matrix, row-major.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t dim, double fill = 0.0);

  static Matrix identity(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// Per-modality linear maps applied to frozen base embeddings. An identity
/// head leaves the base embeddings untouched.
struct ProjectionHead {
  Matrix text_matrix;
  Matrix image_matrix;

  static ProjectionHead identity(std::size_t dim);
  std::size_t dim() const noexcept { return text_matrix.dim(); }

  bool operator==(const ProjectionHead&) const = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

/// Throws ZeroVector when the Euclidean norm is below 1e-12.
Vector normalize(std::span<const double> v);

/// normalize(c_text * text + c_image * image); the image term is dropped
/// when absent.
Vector weighted_combine(std::span<const double> text, std::optional<std::span<const double>> image,
                        double c_text, double c_image);

Vector matvec(const Matrix& m, std::span<const double> v);
Vector project(const ProjectionHead& head, std::span<const double> v, Modality modality);

void require_finite(std::span<const double> v, const char* what);

}  // namespace phishagent
