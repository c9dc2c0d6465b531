#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ehc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value or document failed one or more validation rules. Every violated
/// rule is listed, not just the first one found.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> violations);
    explicit ValidationError(std::string violation)
        : ValidationError(std::vector<std::string>{std::move(violation)}) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class ConflictError : public Error {
public:
    using Error::Error;
};

}  // namespace ehc
