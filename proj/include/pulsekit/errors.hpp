#pragma once

#include <stdexcept>
#include <string>

namespace pulsekit {

// Base error carrying a stable machine-readable code. The CLI prints these
// as {"error": <code>, "message": <what>} JSON on stderr.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(msg), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define PULSEKIT_DEFINE_ERROR(NAME)                                \
  struct NAME : Error {                                            \
    explicit NAME(const std::string& msg) : Error(#NAME, msg) {}   \
  }

PULSEKIT_DEFINE_ERROR(InvalidArgument);
PULSEKIT_DEFINE_ERROR(SequenceTooShort);
PULSEKIT_DEFINE_ERROR(ConstantInput);
PULSEKIT_DEFINE_ERROR(InvalidTemplate);
PULSEKIT_DEFINE_ERROR(RegionOutOfBounds);
PULSEKIT_DEFINE_ERROR(InvalidRange);
PULSEKIT_DEFINE_ERROR(ClipTooShort);
PULSEKIT_DEFINE_ERROR(UpsampleRequested);
PULSEKIT_DEFINE_ERROR(ShapeMismatch);
PULSEKIT_DEFINE_ERROR(LengthMismatch);
PULSEKIT_DEFINE_ERROR(NoInputEnabled);
PULSEKIT_DEFINE_ERROR(NoTargetEnabled);
PULSEKIT_DEFINE_ERROR(MissingTarget);
PULSEKIT_DEFINE_ERROR(EmptyDataset);
PULSEKIT_DEFINE_ERROR(NonFiniteValue);
PULSEKIT_DEFINE_ERROR(NonFiniteLoss);
PULSEKIT_DEFINE_ERROR(SignalTooShort);
PULSEKIT_DEFINE_ERROR(NoPowerInBand);
PULSEKIT_DEFINE_ERROR(NoBeatsFound);
PULSEKIT_DEFINE_ERROR(NoPairedBeats);
PULSEKIT_DEFINE_ERROR(IoError);
PULSEKIT_DEFINE_ERROR(BadFormat);
PULSEKIT_DEFINE_ERROR(BadConfig);

#undef PULSEKIT_DEFINE_ERROR

}  // namespace pulsekit
