#include "pseudosurv/error.hpp"

namespace pseudosurv {

ErrorCategory category_of(Errc code) noexcept {
  switch (code) {
    case Errc::MissingColumn:
    case Errc::DuplicateId:
    case Errc::NonNumericCell:
    case Errc::NonFiniteCell:
    case Errc::EmptyTable:
    case Errc::InvalidSurvival:
    case Errc::InvalidLabel:
    case Errc::MalformedTable:
    case Errc::NonFiniteInput:
      return ErrorCategory::Data;
    case Errc::NonConvergence:
      return ErrorCategory::Numerical;
    case Errc::IoError:
      return ErrorCategory::Io;
    default:
      return ErrorCategory::Config;
  }
}

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::NonNumericCell: return "NonNumericCell";
    case Errc::NonFiniteCell: return "NonFiniteCell";
    case Errc::EmptyTable: return "EmptyTable";
    case Errc::InvalidSurvival: return "InvalidSurvival";
    case Errc::InvalidLabel: return "InvalidLabel";
    case Errc::MalformedTable: return "MalformedTable";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::InvalidFraction: return "InvalidFraction";
    case Errc::ClassTooSmall: return "ClassTooSmall";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::TooManyComponents: return "TooManyComponents";
    case Errc::SingleClassTraining: return "SingleClassTraining";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::EmptyGrid: return "EmptyGrid";
    case Errc::MissingAuxiliary: return "MissingAuxiliary";
    case Errc::FoldMismatch: return "FoldMismatch";
    case Errc::NoEvents: return "NoEvents";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::NoComparablePairs: return "NoComparablePairs";
    case Errc::TooFewEvents: return "TooFewEvents";
    case Errc::TooFewPairs: return "TooFewPairs";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::IoError: return "IoError";
    case Errc::SchemaViolation: return "SchemaViolation";
  }
  return "Unknown";
}

}  // namespace pseudosurv
