#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pseudosurv {

enum class Errc {
  // data
  MissingColumn,
  DuplicateId,
  NonNumericCell,
  NonFiniteCell,
  EmptyTable,
  InvalidSurvival,
  InvalidLabel,
  MalformedTable,
  // configuration / contract
  InvalidSpec,
  InvalidFraction,
  ClassTooSmall,
  EmptyInput,
  DimensionMismatch,
  LengthMismatch,
  TooFewRows,
  TooManyComponents,
  SingleClassTraining,
  NonFiniteInput,
  EmptyGrid,
  MissingAuxiliary,
  FoldMismatch,
  NoEvents,
  EmptyGroup,
  NoComparablePairs,
  TooFewEvents,
  TooFewPairs,
  TooFewSamples,
  // numerical
  NonConvergence,
  // environment
  IoError,
  SchemaViolation,
};

/// Broad grouping used by the CLI to pick an exit code.
enum class ErrorCategory { Data, Config, Numerical, Io };

ErrorCategory category_of(Errc code) noexcept;
std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  Errc code_;
};

}  // namespace pseudosurv
