#pragma once

#include <complex>

namespace klein_pilot {

using complex = std::complex<double>;

/// Two-component Dirac spinor (phi_plus, phi_minus) at one spacetime point.
struct Spinor2 {
  complex upper{};
  complex lower{};

  Spinor2& operator+=(const Spinor2& o) {
    upper += o.upper;
    lower += o.lower;
    return *this;
  }
  friend Spinor2 operator*(complex c, const Spinor2& s) { return {c * s.upper, c * s.lower}; }
  friend Spinor2 operator+(Spinor2 a, const Spinor2& b) { return a += b; }
  friend Spinor2 operator-(const Spinor2& a, const Spinor2& b) {
    return {a.upper - b.upper, a.lower - b.lower};
  }

  /// psi^dagger psi
  double density() const { return std::norm(upper) + std::norm(lower); }
  /// psi^dagger sigma_x psi
  double current() const { return 2.0 * (std::conj(upper) * lower).real(); }
  /// psi^dagger sigma_y psi
  double spin_y() const { return 2.0 * (std::conj(upper) * lower).imag(); }
};

/// Spinor value together with its spatial derivative.
struct SpinorJet {
  Spinor2 value;
  Spinor2 dx;
};

}  // namespace klein_pilot
