#include "tasksel/error.hpp"

namespace tasksel {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kShape: return "ShapeError";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kDegenerateProbability: return "DegenerateProbability";
    case ErrorCode::kEmptySequence: return "EmptySequence";
    case ErrorCode::kInsufficientCandidates: return "InsufficientCandidates";
    case ErrorCode::kMissingConfidence: return "MissingConfidence";
    case ErrorCode::kMissingScore: return "MissingScore";
    case ErrorCode::kMissingEmbedding: return "MissingEmbedding";
    case ErrorCode::kNoTasks: return "NoTasks";
    case ErrorCode::kInvalidBudget: return "InvalidBudget";
    case ErrorCode::kInvalidKernel: return "InvalidKernel";
    case ErrorCode::kRankExhausted: return "RankExhausted";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kLimitExceeded: return "LimitExceeded";
  }
  return "UnknownError";
}

}  // namespace tasksel
