#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hypadv {

enum class ErrorKind {
  kUsage,
  kIo,
  kIntegrity,
  kTransport,
  kExtraction,
  kSelection,
  kAssembly,
  kAdvising,
  kMetric,
  kTrainer,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; `kind()` lets callers (and the CLI's
// exit-code mapping) distinguish failure classes without RTTI chains.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Transport failures keep the last HTTP status and a bounded body excerpt.
class TransportError : public Error {
 public:
  TransportError(const std::string& message, int status, std::string body_excerpt)
      : Error(ErrorKind::kTransport, message),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}

  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

}  // namespace hypadv
