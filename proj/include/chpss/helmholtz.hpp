#pragma once

#include <string>

#include "chpss/grid.hpp"

namespace chpss {

/// Realization of the inverse Helmholtz operator (1 - d^2/dx^2)^{-1}.
enum class KernelMethod {
    SpectralMultiplier, // Fourier multiplier 1/(1+k^2); periodic grids only
    TwoPassExponential, // O(N) forward/backward recurrences for e^{-|x|}/2 * f
};

const char* to_string(KernelMethod method);
KernelMethod kernel_method_from_string(const std::string& text);

/// u with (1 - d^2/dx^2) u = f, i.e. convolution with e^{-|x|}/2.
///
/// The two-pass path sums the trapezoid rule through two exponential
/// recurrences with no inflow from beyond [-L, L), then removes the kink
/// error of the kernel at x = y with the Euler-Maclaurin endpoint terms, so
/// it is 6th-order accurate for smooth data.
Field helmholtz_inverse(const Field& f, KernelMethod method = KernelMethod::SpectralMultiplier);

/// d/dx of helmholtz_inverse(f): convolution with -sgn(x) e^{-|x|}/2.
Field dx_helmholtz_inverse(const Field& f, KernelMethod method = KernelMethod::SpectralMultiplier);

/// m = u - u_xx.
Field momentum(const Field& u);

/// u0 recovered from a momentum profile m0.
Field velocity_from_momentum(const Field& m0, KernelMethod method = KernelMethod::SpectralMultiplier);

} // namespace chpss
