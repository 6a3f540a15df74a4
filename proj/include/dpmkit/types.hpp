#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpmkit {

/// A point of the diffusion ODE: one flattened sample.
using State = std::vector<double>;
using StateView = std::span<const double>;

/// Raised when a time or log-SNR value lies outside a schedule's valid range.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an adaptive solve fails to reach the end time.
class NonTermination : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpmkit
