//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CSMILES_ERROR_H_
#define CSMILES_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace csmiles {

enum class ErrorCode {
  // smiles-core
  kEmptyInput,
  kIllegalCharacter,
  kUnterminatedBracket,
  kInvalidAtom,
  kUnbalancedBranch,
  kUnmatchedRingClosure,
  kDanglingBond,
  kDuplicateBond,
  kInvalidRoot,
  // csmiles-codec
  kDanglingModifier,
  kMalformedSequence,
  kEmptyCorpus,
  // alignment
  kDuplicateAtomMap,
  // seq2seq-engine
  kSequenceTooLong,
  kUnknownId,
  kLengthMismatch,
  kShapeMismatch,
  kEmptyDataset,
  kDivergedLoss,
  kGradMismatch,
  kInvalidConfig,
  kCheckpoint,
  // decoding-eval
  kGoldParseError,
  // cli-harness
  kFileNotFound,
  kAllLinesInvalid,
  kIo,
  kMalformedLine,
};

std::string_view error_code_name(ErrorCode code);

class Error: public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) { }

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace csmiles

#endif  // CSMILES_ERROR_H_
