#ifndef stratamix_errors_hpp_
#define stratamix_errors_hpp_

#include <stdexcept>
#include <string>

namespace stratamix {

// Base of all stratamix exceptions.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input (files, CLI arguments, field domains).
// Mapped to process exit code 3 by the CLI.
class InputError : public Error {
public:
    explicit InputError(const std::string &msg) : Error(msg) {}
};

// A virtual-printer deviation budget was exceeded.
// Mapped to process exit code 2 by the CLI.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string &msg) : Error(msg) {}
};

} // namespace stratamix

#endif
