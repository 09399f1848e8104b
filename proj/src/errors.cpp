#include "paracon/errors.hpp"

namespace paracon {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::ExpressionFailure: return "ExpressionFailure";
    case ErrorCode::IrregularPoint: return "IrregularPoint";
    case ErrorCode::MaxLevelsExceeded: return "MaxLevelsExceeded";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::NotSym2Bundle: return "NotSym2Bundle";
    case ErrorCode::CurveLeavesDomain: return "CurveLeavesDomain";
    case ErrorCode::CurveNotClosed: return "CurveNotClosed";
    case ErrorCode::DefectTooLarge: return "DefectTooLarge";
    case ErrorCode::NoPDElement: return "NoPDElement";
    case ErrorCode::RankNotOne: return "RankNotOne";
    case ErrorCode::GeneratorNotPD: return "GeneratorNotPD";
    case ErrorCode::SingularMetric: return "SingularMetric";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ManifestInvalid: return "ManifestInvalid";
    case ErrorCode::CorpusCorrupted: return "CorpusCorrupted";
  }
  return "Unknown";
}

}  // namespace paracon
