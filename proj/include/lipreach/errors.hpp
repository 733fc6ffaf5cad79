#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "lipreach/geometry.hpp"

namespace lipreach {

/// Caller passed something the contract forbids.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line, int column)
        : std::runtime_error(what), line(line), column(column) {}
    int line;
    int column;
};

/// An approximation oracle would need more evaluations than its cap allows.
class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_precision(achieved) {}
    double achieved_precision;
};

/// Lower bound rose above the upper bound: some declared input (usually a
/// Lipschitz constant) is wrong.
class BoundCrossing : public std::runtime_error {
public:
    BoundCrossing(const std::string& what, StatePoint s, ActionPoint a, double lower, double upper)
        : std::runtime_error(what), state(std::move(s)), action(std::move(a)), lower(lower), upper(upper) {}
    StatePoint state;
    ActionPoint action;
    double lower;
    double upper;
};

/// The gap at the initial state stopped moving; typically an absorption failure.
class Stagnation : public std::runtime_error {
public:
    Stagnation(const std::string& what, std::int64_t step, double gap)
        : std::runtime_error(what), step(step), gap(gap) {}
    std::int64_t step;
    double gap;
};

class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsupportedModel : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lipreach
