#pragma once

#include <stdexcept>
#include <string>

namespace curvedfield {

/// Base of every exception thrown by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (bad index, chi outside
/// the comoving range, k off the closed-model lattice, ...).
class domain_error : public error {
 public:
  using error::error;
};

/// A numerical procedure failed to reach the requested accuracy, or a truncated
/// sum/integral shows a divergent tail.
class convergence_error : public error {
 public:
  using error::error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw domain_error(message);
}

}  // namespace detail
}  // namespace curvedfield
