#pragma once

#include <stdexcept>
#include <string>

namespace setcbf {

// Bad problem data: dimension mismatches, invalid parameters, malformed files.
// The CLI maps this to exit code 3.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A computation exceeded a resource cap (e.g. projection row blow-up).
class ResourceError : public std::runtime_error {
  public:
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// gamma() query for a state outside the representable cone of a V-polytope.
class ConeError : public std::runtime_error {
  public:
    explicit ConeError(const std::string& what) : std::runtime_error(what) {}
};

// Filter step infeasible and no fallback enabled. The CLI maps this to exit code 2.
class InfeasibleError : public std::runtime_error {
  public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace setcbf
