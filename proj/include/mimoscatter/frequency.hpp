// frequency.hpp — angular frequency, free wavenumber and spectral parameter
#pragma once

#include <cmath>
#include <stdexcept>

#include "mimoscatter/geom.hpp"

namespace mimoscatter {

/// Frequency-domain working point: signed angular frequency omega, free
/// wavenumber k0 = |omega|/c and spectral parameter z0 = k0^2 + j*eta.
///
/// The solver evaluates the resolvent boundary value at z0 approached from
/// the half plane matching sign(omega): the radiating kernel carries
/// exp(+j*k0*|x-y|) for omega > 0 and the conjugate branch for omega < 0,
/// so that real time signals come out conjugate-symmetric in omega.
struct Frequency {
  double omega = 0.0;  // rad/s, signed
  double eta = 0.0;    // absorption parameter, >= 0

  static Frequency from_hz(double f_hz, double eta = 0.0) {
    return Frequency{2.0 * constants::pi * f_hz, eta};
  }

  Frequency(double omega_, double eta_ = 0.0) : omega(omega_), eta(eta_) {
    if (omega == 0.0) throw std::invalid_argument("Frequency: omega must be nonzero");
    if (eta < 0.0) throw std::invalid_argument("Frequency: eta must be >= 0");
  }

  double k0() const { return std::abs(omega) / constants::c0; }

  /// Complex wavenumber entering the kernel exp(j*kappa*|x-y|)/(4*pi*|x-y|).
  /// Im(kappa) >= 0 always, Re(kappa) carries the sign of omega.
  cplx kappa() const {
    const cplx root = std::sqrt(cplx(k0() * k0(), eta));
    const double s = omega >= 0.0 ? 1.0 : -1.0;
    return cplx(s * root.real(), root.imag());
  }

  /// Spectral parameter of the resolvent actually solved, kappa^2.
  /// Equals k0^2 + j*eta for omega > 0 and its conjugate for omega < 0.
  cplx z() const {
    const cplx k = kappa();
    return k * k;
  }

  Frequency negated() const { return Frequency(-omega, eta); }
};

}  // namespace mimoscatter
