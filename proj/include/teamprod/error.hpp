#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace teamprod {

enum class ErrorKind {
    invalid_argument,
    invalid_range,
    invalid_k,
    missing_team_size,
    unreadable_source,
    cyclic_history,
    malformed_input,
    state_missing,
    empty_input,
    empty_history,
    missing_delta,
    nonpositive_under_log,
    non_symmetric,
    insufficient_observations,
    rank_deficient,
    wrong_model_family,
    infeasible_plan,
    size_limit_exceeded,
    missing_upstream_artifact,
    config_hash_mismatch,
    internal,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid-argument";
        case ErrorKind::invalid_range: return "invalid-range";
        case ErrorKind::invalid_k: return "invalid-k";
        case ErrorKind::missing_team_size: return "missing-team-size";
        case ErrorKind::unreadable_source: return "unreadable-source";
        case ErrorKind::cyclic_history: return "cyclic-history";
        case ErrorKind::malformed_input: return "malformed-input";
        case ErrorKind::state_missing: return "state-missing";
        case ErrorKind::empty_input: return "empty-input";
        case ErrorKind::empty_history: return "empty-history";
        case ErrorKind::missing_delta: return "missing-delta";
        case ErrorKind::nonpositive_under_log: return "nonpositive-value-under-log";
        case ErrorKind::non_symmetric: return "non-symmetric";
        case ErrorKind::insufficient_observations: return "insufficient-observations";
        case ErrorKind::rank_deficient: return "rank-deficient";
        case ErrorKind::wrong_model_family: return "wrong-model-family";
        case ErrorKind::infeasible_plan: return "infeasible-plan";
        case ErrorKind::size_limit_exceeded: return "size-limit-exceeded";
        case ErrorKind::missing_upstream_artifact: return "missing-upstream-artifact";
        case ErrorKind::config_hash_mismatch: return "config-hash-mismatch";
        case ErrorKind::internal: return "internal";
    }
    return "unknown";
}

/// Every library failure is reported through this type; `kind()` is the
/// machine-readable category the CLI maps onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace teamprod
