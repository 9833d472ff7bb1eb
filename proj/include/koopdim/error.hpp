#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace koopdim {

enum class ErrorCode {
  NegativePowerOnNonInvertible,
  UnsupportedCellFamily,
  UnsupportedOperation,
  WindowExhausted,
  NegativeWeight,
  SumNotOne,
  SystemMismatch,
  BudgetExceeded,
  ZeroMeasureConditioningCell,
  RepresentationMismatch,
  TooFewSnapshots,
  EpsilonTooSmall,
  DeltaNonPositive,
  ChartOverflow,
  GridTooFine,
  ConfigParse,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures surface as this exception; the code is what callers switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace koopdim
