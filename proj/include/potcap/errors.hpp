#pragma once

#include <stdexcept>
#include <string>

namespace potcap {

/// Invalid parameters or inputs that violate an operation's preconditions.
class domain_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The linear-program solver could not certify an optimum.
class solver_error : public std::runtime_error {
public:
    explicit solver_error(const std::string& what, long iterations = 0)
        : std::runtime_error(what), iterations_(iterations) {}
    long iterations() const noexcept { return iterations_; }

private:
    long iterations_;
};

/// Malformed input file; carries the 1-based line number when known.
class parse_error : public domain_error {
public:
    parse_error(const std::string& what, std::size_t line)
        : domain_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw domain_error(msg);
}

}  // namespace potcap
