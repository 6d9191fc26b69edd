#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "chpss/solver.hpp"

namespace chpss {

/// Particle paths q(x_i, t) of dq/dt = u(q, t), sampled at the stored frame times.
struct CharacteristicFan {
    std::vector<double> seeds;
    std::vector<double> times;
    /// paths[k][i] = q(seeds[i], times[k])
    std::vector<std::vector<double>> paths;
    /// qx[k][i]: central differences across seeds, one-sided at the ends
    std::vector<std::vector<double>> qx;
    /// ux and m evaluated on the paths at each frame time
    std::vector<std::vector<double>> ux_on_path;
    std::vector<std::vector<double>> m_on_path;

    /// Smallest q_{i+1} - q_i over all frames.
    double min_gap() const;
    bool monotone() const { return min_gap() > 0.0; }
};

/// Samples a frame field at arbitrary x: the trigonometric interpolant on
/// periodic grids, 6-point Lagrange interpolation otherwise.
class PointSampler {
public:
    explicit PointSampler(const Field& f);
    double operator()(double x) const;

private:
    const Field* field_;
    std::vector<std::complex<double>> coeff_;
    double origin_ = 0.0;
    double dk_ = 0.0;
    bool spectral_ = false;
};

/// RK4 along each path with `substeps` steps per frame interval; u between
/// frames is linear in t. Seeds must be increasing. Throws Fault(Tail) when a
/// path leaves [-L, L].
CharacteristicFan evolve_characteristics(const Trajectory& traj, std::span<const double> seeds, int substeps = 1);

struct TransportReport {
    /// residual[i][k] = |m(q_i, t_k) - m0(x_i) exp(-2 int_0^t ux(q_i) dt)| / scale
    std::vector<std::vector<double>> residual;
    double scale = 0.0; // sup |m0| over the lattice
    double max_relative = 0.0;
    /// m(q_i, t_k) carries the sign of m0(x_i) wherever |m0(x_i)| exceeds the
    /// interpolation floor.
    bool sign_preserved = true;
    std::size_t sign_violations = 0;
};

/// Checks the momentum transport identity along the fan; the time integral is
/// the trapezoid rule over the frame times.
TransportReport transport_identity_residual(const Trajectory& traj, const CharacteristicFan& fan);

} // namespace chpss
