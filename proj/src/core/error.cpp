//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "csmiles/error.h"

namespace csmiles {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
  case ErrorCode::kEmptyInput:
    return "EmptyInput";
  case ErrorCode::kIllegalCharacter:
    return "IllegalCharacter";
  case ErrorCode::kUnterminatedBracket:
    return "UnterminatedBracket";
  case ErrorCode::kInvalidAtom:
    return "InvalidAtom";
  case ErrorCode::kUnbalancedBranch:
    return "UnbalancedBranch";
  case ErrorCode::kUnmatchedRingClosure:
    return "UnmatchedRingClosure";
  case ErrorCode::kDanglingBond:
    return "DanglingBond";
  case ErrorCode::kDuplicateBond:
    return "DuplicateBond";
  case ErrorCode::kInvalidRoot:
    return "InvalidRoot";
  case ErrorCode::kDanglingModifier:
    return "DanglingModifier";
  case ErrorCode::kMalformedSequence:
    return "MalformedSequence";
  case ErrorCode::kEmptyCorpus:
    return "EmptyCorpus";
  case ErrorCode::kDuplicateAtomMap:
    return "DuplicateAtomMap";
  case ErrorCode::kSequenceTooLong:
    return "SequenceTooLong";
  case ErrorCode::kUnknownId:
    return "UnknownId";
  case ErrorCode::kLengthMismatch:
    return "LengthMismatch";
  case ErrorCode::kShapeMismatch:
    return "ShapeMismatch";
  case ErrorCode::kEmptyDataset:
    return "EmptyDataset";
  case ErrorCode::kDivergedLoss:
    return "DivergedLoss";
  case ErrorCode::kGradMismatch:
    return "GradMismatch";
  case ErrorCode::kInvalidConfig:
    return "InvalidConfig";
  case ErrorCode::kCheckpoint:
    return "Checkpoint";
  case ErrorCode::kGoldParseError:
    return "GoldParseError";
  case ErrorCode::kFileNotFound:
    return "FileNotFound";
  case ErrorCode::kAllLinesInvalid:
    return "AllLinesInvalid";
  case ErrorCode::kIo:
    return "Io";
  case ErrorCode::kMalformedLine:
    return "MalformedLine";
  }
  return "Unknown";
}

}  // namespace csmiles
