#pragma once

#include <stdexcept>
#include <string>

namespace wpx {

/// Precondition or value-domain violation in a caller-supplied argument.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A fitting stage failed. `stage()` names the pipeline step that raised it.
class EstimationError : public std::runtime_error {
public:
    EstimationError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

class RankDeficientError : public EstimationError {
public:
    explicit RankDeficientError(const std::string& what) : EstimationError("ols", what) {}
};

/// An internal invariant (delay hygiene, posterior definiteness, ...) was broken.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace wpx
