#pragma once

#include <stdexcept>
#include <string>

namespace paracon {

enum class ErrorCode {
  OutsideDomain,
  ExpressionFailure,
  IrregularPoint,
  MaxLevelsExceeded,
  EmptyGrid,
  NotSym2Bundle,
  CurveLeavesDomain,
  CurveNotClosed,
  DefectTooLarge,
  NoPDElement,
  RankNotOne,
  GeneratorNotPD,
  SingularMetric,
  InvalidArgument,
  ManifestInvalid,
  CorpusCorrupted,
};

const char* to_string(ErrorCode code);

/// Base error for every analysis failure. `code()` identifies the condition;
/// `level()` carries the flag level for IrregularPoint (otherwise -1).
class AnalysisError : public std::runtime_error {
 public:
  AnalysisError(ErrorCode code, const std::string& what, int level = -1)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        level_(level) {}

  ErrorCode code() const { return code_; }
  int level() const { return level_; }

 private:
  ErrorCode code_;
  int level_;
};

}  // namespace paracon
