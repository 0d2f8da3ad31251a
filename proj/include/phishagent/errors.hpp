#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace phishagent {

enum class ErrorKind {
  Parse,
  Io,
  InvalidArgument,
  DimensionMismatch,
  DuplicateBrandId,
  ZeroVector,
  UnknownVariant,
  EmptyIndex,
  EmptyAfterGrounding,
  NonFiniteLoss,
  InvalidUrl,
  Preprocess,
  ClientError,
  MissingFixture,
  MissingPlaceholder,
  UnparseableResponse,
  BackendUnavailable,
  Timeout,
  UnlabeledSample,
};

std::string_view to_string(ErrorKind kind);

// True for failures of an external service (search engine, model API).
bool is_transport_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

  /// Same kind, with `context` prepended to the detail.
  static Error wrap(const Error& inner, const std::string& context);

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace phishagent
