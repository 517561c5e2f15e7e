#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace pintadj {

using Index = std::int64_t;
using Vector = std::vector<double>;
using Buffer = std::vector<std::byte>;

/// Design parameters the objective is differentiated against.
struct Design {
    std::vector<double> values;

    Design() = default;
    Design(std::initializer_list<double> init) : values(init) {}
    explicit Design(std::vector<double> v) : values(std::move(v)) {}

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
};

/// Raised when a configuration violates a precondition before any work starts.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A time step (or its adjoint) could not be computed.
class StepError : public std::runtime_error {
public:
    StepError(const std::string& what, int level, Index index, int iterations = 0)
        : std::runtime_error(what + " (level " + std::to_string(level) + ", time index " +
                             std::to_string(index) + ")"),
          level_(level), index_(index), iterations_(iterations)
    {
    }

    int level() const { return level_; }
    Index index() const { return index_; }
    int iterations() const { return iterations_; }

private:
    int level_;
    Index index_;
    int iterations_;
};

/// Broken tape or adjoint-slot bookkeeping. Always a bug, never a user error.
class TapeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace pintadj
