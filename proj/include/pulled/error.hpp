#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pulled {

/// Failure categories shared by every module. Each maps to a distinct
/// recovery action, so callers switch on the code, not on the message.
enum class ErrorCode {
    InvalidModel,
    NoConvergence,
    DegenerateDoubleRoot,
    RootCollision,
    NotPinched,
    HypothesisViolated,
    DoubleRootResidual,
    CentralRootAmbiguous,
    JordanCollision,
    BetaZero,
    OverflowGuard,
    BoundViolated,
    GridTooCoarse,
    WindowUnderflow,
    GapFails,
    GridMismatch,
    SingularSystem,
    ResidualLarge,
    TangencyFitFailed,
    QuadratureUnconverged,
    StepsizeUnderflow,
    BlowupDetected,
    PsiUnavailable,
    ConfigInvalid,
};

constexpr std::string_view to_string(ErrorCode c) noexcept {
    switch (c) {
        case ErrorCode::InvalidModel: return "InvalidModel";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::DegenerateDoubleRoot: return "DegenerateDoubleRoot";
        case ErrorCode::RootCollision: return "RootCollision";
        case ErrorCode::NotPinched: return "NotPinched";
        case ErrorCode::HypothesisViolated: return "HypothesisViolated";
        case ErrorCode::DoubleRootResidual: return "DoubleRootResidual";
        case ErrorCode::CentralRootAmbiguous: return "CentralRootAmbiguous";
        case ErrorCode::JordanCollision: return "JordanCollision";
        case ErrorCode::BetaZero: return "BetaZero";
        case ErrorCode::OverflowGuard: return "OverflowGuard";
        case ErrorCode::BoundViolated: return "BoundViolated";
        case ErrorCode::GridTooCoarse: return "GridTooCoarse";
        case ErrorCode::WindowUnderflow: return "WindowUnderflow";
        case ErrorCode::GapFails: return "GapFails";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::ResidualLarge: return "ResidualLarge";
        case ErrorCode::TangencyFitFailed: return "TangencyFitFailed";
        case ErrorCode::QuadratureUnconverged: return "QuadratureUnconverged";
        case ErrorCode::StepsizeUnderflow: return "StepsizeUnderflow";
        case ErrorCode::BlowupDetected: return "BlowupDetected";
        case ErrorCode::PsiUnavailable: return "PsiUnavailable";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace pulled
