// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace advf {

enum class ErrorKind {
  kDimension,
  kData,
  kConfig,
  kUsage,
  kNumeric,
  kIntegrity,
  kVersion,
  kLookup,
};

/// Base class for every error raised by the library. The kind drives the
/// CLI exit code mapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define ADVF_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Kind, what) {}      \
  };

ADVF_DEFINE_ERROR(DimensionError, ErrorKind::kDimension)
ADVF_DEFINE_ERROR(DataError, ErrorKind::kData)
ADVF_DEFINE_ERROR(ConfigError, ErrorKind::kConfig)
ADVF_DEFINE_ERROR(UsageError, ErrorKind::kUsage)
ADVF_DEFINE_ERROR(NumericError, ErrorKind::kNumeric)
ADVF_DEFINE_ERROR(IntegrityError, ErrorKind::kIntegrity)
ADVF_DEFINE_ERROR(VersionError, ErrorKind::kVersion)
ADVF_DEFINE_ERROR(LookupError, ErrorKind::kLookup)

#undef ADVF_DEFINE_ERROR

}  // namespace advf
