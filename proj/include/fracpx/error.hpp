#pragma once

#include <stdexcept>
#include <string>

namespace fracpx {

enum class Errc {
  invalid_argument,
  non_finite,
  degenerate_denominator,
  non_integrable_adjacency,
  no_exterior_collar,
  growth_violation,
  not_converged,
  config,
  io,
};

/// Library-wide exception. The code lets callers (the CLI in particular)
/// map failures to exit statuses without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace fracpx
