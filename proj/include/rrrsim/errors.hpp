#pragma once

#include <stdexcept>
#include <string>

namespace rrrsim {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A chain's coupling point lies outside its reachable annulus.
struct UnreachableError : Error {
  UnreachableError(int chain_index, double distance)
      : Error("chain " + std::to_string(chain_index) +
              ": coupling point at distance " + std::to_string(distance) +
              " m is outside the reachable annulus"),
        chain(chain_index) {}
  int chain;
};

/// Serial singularity: a leg chain is stretched or folded flat.
struct SingularChainError : Error {
  explicit SingularChainError(int chain_index)
      : Error("chain " + std::to_string(chain_index) +
              " is singular (stretched or folded)"),
        chain(chain_index) {}
  int chain;
};

/// Parallel (type II) singularity: the platform constraint Jacobian lost rank.
struct PlatformSingularError : Error {
  PlatformSingularError() : Error("platform constraint Jacobian is singular") {}
};

struct NoConvergenceError : Error {
  explicit NoConvergenceError(int iterations)
      : Error("iteration did not converge after " +
              std::to_string(iterations) + " steps"),
        iterations(iterations) {}
  int iterations;
};

struct NotSpdError : Error {
  explicit NotSpdError(const std::string& what) : Error(what) {}
};

struct InsufficientExcitationError : Error {
  explicit InsufficientExcitationError(const std::string& what) : Error(what) {}
};

struct SchemaMismatchError : Error {
  explicit SchemaMismatchError(const std::string& what) : Error(what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace rrrsim
