#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace klein_pilot {

enum class errc {
  invalid_argument,
  degenerate_energy,
  kappa_singular,
  wrong_case,
  node_point,
  empty_slice,
  quadrature_under_resolved,
  unknown_preset,
  config_error,
};

constexpr std::string_view to_string(errc code) {
  switch (code) {
    case errc::invalid_argument: return "InvalidArgument";
    case errc::degenerate_energy: return "DegenerateEnergy";
    case errc::kappa_singular: return "KappaSingular";
    case errc::wrong_case: return "WrongCase";
    case errc::node_point: return "NodePoint";
    case errc::empty_slice: return "EmptySlice";
    case errc::quadrature_under_resolved: return "QuadratureUnderResolved";
    case errc::unknown_preset: return "UnknownPreset";
    case errc::config_error: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace klein_pilot
