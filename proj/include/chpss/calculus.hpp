#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "chpss/grid.hpp"

namespace chpss {

/// Lattice extremum; `position` is the grid coordinate of `index` unless the
/// value was refined off-lattice.
struct Extremum {
    double value;
    double position;
    std::size_t index;
};

/// d^order f / dx^order, order in 1..4. Periodic grids use the Fourier
/// multiplier (ik)^order (Nyquist mode dropped for odd orders); decay-truncated
/// grids use 4th-order central differences with one-sided closures.
Field derivative(const Field& f, int order = 1);

/// Finite-difference derivative regardless of boundary mode (4th-order
/// central, one-sided closures at the edges).
Field fd_derivative(const Field& f, int order);

/// Trapezoid rule on [-L, L]. Periodic: dx * sum. Decay-truncated: the
/// missing endpoint x = L is taken as zero.
double integrate(const Field& f);

/// Fourier-multiplier H^s norm, normalized so that s = 0 equals
/// sqrt(integrate(f*f)). For data decaying on the line the result differs
/// from the line norm by the truncated tail mass, O(e^{-L}) for
/// exponentially decaying data. Periodic grids only.
double sobolev_norm(const Field& f, double s);

/// Minimum and its leftmost lattice location.
Extremum inf_with_argmin(const Field& f);
/// Maximum and its leftmost lattice location.
Extremum sup_with_argmax(const Field& f);

/// Off-lattice minimum: Newton on the spectral interpolant (periodic) or a
/// parabola through the three bracketing samples (decay-truncated), started
/// from the lattice minimum.
Extremum refine_minimum(const Field& f);

/// Band-limited trigonometric interpolant of a periodic Field.
class SpectralInterpolant {
public:
    explicit SpectralInterpolant(const Field& f);

    /// Interpolant and its first two derivatives at x.
    std::array<double, 3> evaluate(double x) const;
    double value(double x) const { return evaluate(x)[0]; }

    double origin() const noexcept { return origin_; }

private:
    std::vector<std::complex<double>> coeff_;
    double origin_;
    double dk_;
};

/// Finite-difference weights (Fornberg). Returns w[d][i] such that
/// f^(d)(x0) ~ sum_i w[d][i] f(nodes[i]) for d = 0..max_order.
std::vector<std::vector<double>> fornberg_weights(double x0, std::span<const double> nodes, int max_order);

/// CSV with header `x,value`, 17 significant digits.
void write_field_csv(const Field& f, const std::string& path);
Field read_field_csv(const Grid& grid, const std::string& path);

} // namespace chpss
