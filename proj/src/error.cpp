#include "koopdim/error.hpp"

namespace koopdim {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NegativePowerOnNonInvertible: return "NegativePowerOnNonInvertible";
    case ErrorCode::UnsupportedCellFamily: return "UnsupportedCellFamily";
    case ErrorCode::UnsupportedOperation: return "UnsupportedOperation";
    case ErrorCode::WindowExhausted: return "WindowExhausted";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::SumNotOne: return "SumNotOne";
    case ErrorCode::SystemMismatch: return "SystemMismatch";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::ZeroMeasureConditioningCell: return "ZeroMeasureConditioningCell";
    case ErrorCode::RepresentationMismatch: return "RepresentationMismatch";
    case ErrorCode::TooFewSnapshots: return "TooFewSnapshots";
    case ErrorCode::EpsilonTooSmall: return "EpsilonTooSmall";
    case ErrorCode::DeltaNonPositive: return "DeltaNonPositive";
    case ErrorCode::ChartOverflow: return "ChartOverflow";
    case ErrorCode::GridTooFine: return "GridTooFine";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace koopdim
