// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace hyperfake {

// Every failure surfaced by the library derives from Error. The kind() tag is
// what the CLI maps onto exit codes.
enum class ErrorKind {
  kSchema,
  kValidation,
  kLeakage,
  kStratification,
  kIo,
  kChannel,
  kFormat,
  kConfig,
  kShape,
  kNumeric,
  kCheckpoint,
  kDomain,
  kMetric,
  kContract,
  kIntegrity,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define HYPERFAKE_DEFINE_ERROR(Name, Kind)                                 \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& message) : Error(Kind, message) {}    \
  };

HYPERFAKE_DEFINE_ERROR(SchemaError, ErrorKind::kSchema)
HYPERFAKE_DEFINE_ERROR(ValidationError, ErrorKind::kValidation)
HYPERFAKE_DEFINE_ERROR(LeakageError, ErrorKind::kLeakage)
HYPERFAKE_DEFINE_ERROR(StratificationError, ErrorKind::kStratification)
HYPERFAKE_DEFINE_ERROR(IoError, ErrorKind::kIo)
HYPERFAKE_DEFINE_ERROR(ChannelError, ErrorKind::kChannel)
HYPERFAKE_DEFINE_ERROR(FormatError, ErrorKind::kFormat)
HYPERFAKE_DEFINE_ERROR(ConfigError, ErrorKind::kConfig)
HYPERFAKE_DEFINE_ERROR(ShapeError, ErrorKind::kShape)
HYPERFAKE_DEFINE_ERROR(NumericError, ErrorKind::kNumeric)
HYPERFAKE_DEFINE_ERROR(CheckpointError, ErrorKind::kCheckpoint)
HYPERFAKE_DEFINE_ERROR(DomainError, ErrorKind::kDomain)
HYPERFAKE_DEFINE_ERROR(MetricError, ErrorKind::kMetric)
HYPERFAKE_DEFINE_ERROR(ContractError, ErrorKind::kContract)
HYPERFAKE_DEFINE_ERROR(IntegrityError, ErrorKind::kIntegrity)

#undef HYPERFAKE_DEFINE_ERROR

}  // namespace hyperfake
