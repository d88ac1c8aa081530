#pragma once

#include <stdexcept>
#include <string>

namespace refine_loop {

/// Workspace layout or workflow-graph problems (missing files, invalid stages.yaml,
/// graph violations). Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Provider transport, auth, or retry-exhaustion failures. Maps to CLI exit code 2.
class ProviderError : public std::runtime_error {
public:
    explicit ProviderError(const std::string& what, bool retryable = false)
        : std::runtime_error(what), retryable_(retryable) {}

    bool retryable() const { return retryable_; }

private:
    bool retryable_ = false;
};

/// A model response that could not be parsed into the expected shape. Exit code 2.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Resume preconditions not met (corrupted runlog). Exit code 3.
class ResumeError : public std::runtime_error {
public:
    explicit ResumeError(const std::string& what) : std::runtime_error(what) {}
};

/// A prompt budget too small to hold the untruncatable sections.
class BudgetError : public std::runtime_error {
public:
    BudgetError(const std::string& what, long minimum_feasible)
        : std::runtime_error(what), minimum_feasible_(minimum_feasible) {}

    long minimum_feasible() const { return minimum_feasible_; }

private:
    long minimum_feasible_ = 0;
};

}  // namespace refine_loop
