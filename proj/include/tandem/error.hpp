#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tandem {

enum class ErrorKind {
    NonPositiveRate,
    CollaborationBoundViolated,
    OrphanCollaboration,
    EmptySystem,
    DependencyMissing,
    InfeasibleAction,
    DomainTooSmall,
    NotThresholdShaped,
    IdlingRegimeRequired,
    HypothesisNotMet,
    RegimeUnsatisfiable,
    GoldenMismatch,
    DeadPolicy,
    SearchSpaceTooLarge,
    MaxIterationsExceeded,
    InvalidArgument,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NonPositiveRate: return "NonPositiveRate";
    case ErrorKind::CollaborationBoundViolated: return "CollaborationBoundViolated";
    case ErrorKind::OrphanCollaboration: return "OrphanCollaboration";
    case ErrorKind::EmptySystem: return "EmptySystem";
    case ErrorKind::DependencyMissing: return "DependencyMissing";
    case ErrorKind::InfeasibleAction: return "InfeasibleAction";
    case ErrorKind::DomainTooSmall: return "DomainTooSmall";
    case ErrorKind::NotThresholdShaped: return "NotThresholdShaped";
    case ErrorKind::IdlingRegimeRequired: return "IdlingRegimeRequired";
    case ErrorKind::HypothesisNotMet: return "HypothesisNotMet";
    case ErrorKind::RegimeUnsatisfiable: return "RegimeUnsatisfiable";
    case ErrorKind::GoldenMismatch: return "GoldenMismatch";
    case ErrorKind::DeadPolicy: return "DeadPolicy";
    case ErrorKind::SearchSpaceTooLarge: return "SearchSpaceTooLarge";
    case ErrorKind::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Validation failures are the ones caused by bad instance data.
constexpr bool is_validation_error(ErrorKind kind) {
    return kind == ErrorKind::NonPositiveRate || kind == ErrorKind::CollaborationBoundViolated ||
           kind == ErrorKind::OrphanCollaboration;
}

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

} // namespace tandem
