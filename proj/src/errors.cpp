#include "phishagent/errors.hpp"

namespace phishagent {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DuplicateBrandId: return "DuplicateBrandId";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::UnknownVariant: return "UnknownVariant";
    case ErrorKind::EmptyIndex: return "EmptyIndex";
    case ErrorKind::EmptyAfterGrounding: return "EmptyAfterGrounding";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::InvalidUrl: return "InvalidUrl";
    case ErrorKind::Preprocess: return "PreprocessError";
    case ErrorKind::ClientError: return "ClientError";
    case ErrorKind::MissingFixture: return "MissingFixture";
    case ErrorKind::MissingPlaceholder: return "MissingPlaceholder";
    case ErrorKind::UnparseableResponse: return "UnparseableResponse";
    case ErrorKind::BackendUnavailable: return "BackendUnavailable";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::UnlabeledSample: return "UnlabeledSample";
  }
  return "Unknown";
}

bool is_transport_error(ErrorKind kind) {
  return kind == ErrorKind::ClientError || kind == ErrorKind::BackendUnavailable ||
         kind == ErrorKind::Timeout;
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

Error Error::wrap(const Error& inner, const std::string& context) {
  return Error(inner.kind(), context + ": " + inner.detail());
}

}  // namespace phishagent
