#ifndef COINFER_ERROR_HPP
#define COINFER_ERROR_HPP

#include <stdexcept>
#include <string>

namespace coinfer {

/// Invalid or incomplete input configuration. `field()` names the offending
/// key path (e.g. "params.noise_w") when one is known.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what, std::string field = {})
      : std::runtime_error(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Quadrature (or another numerical routine) did not reach its tolerance.
class numerical_failure : public std::runtime_error {
 public:
  numerical_failure(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what + " (estimate " + std::to_string(estimate) +
                           ", error bound " + std::to_string(error_bound) + ")"),
        estimate_(estimate),
        error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

}  // namespace coinfer

#endif  // COINFER_ERROR_HPP
