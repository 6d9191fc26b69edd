#pragma once

// Reference computations used only by the tests. None of these call into the
// library's own calculus, so they can stand as independent oracles.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

inline double gaussian(double x, double n) { return std::exp(-n * x * x); }
inline double gaussian_d1(double x, double n) { return -2.0 * n * x * std::exp(-n * x * x); }
inline double gaussian_d2(double x, double n) {
    return (4.0 * n * n * x * x - 2.0 * n) * std::exp(-n * x * x);
}

/// 20-point Gauss-Legendre rule on [a, b].
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b) {
    static const std::array<double, 10> nodes = {
        0.0765265211334973, 0.2277858511416451, 0.3737060887154195, 0.5108670019508271,
        0.6360536807265150, 0.7463319064601508, 0.8391169718222188, 0.9122344282513259,
        0.9639719272779138, 0.9931285991850949};
    static const std::array<double, 10> weights = {
        0.1527533871307258, 0.1491729864726037, 0.1420961093183820, 0.1316886384491766,
        0.1181945319615184, 0.1019301198172404, 0.0832767415767048, 0.0626720483341091,
        0.0406014298003869, 0.0176140071391521};
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        s += weights[i] * (f(c + h * nodes[i]) + f(c - h * nodes[i]));
    }
    return h * s;
}

/// Composite Gauss-Legendre over [a, b] with `panels` equal panels.
inline double composite_gl(const std::function<double(double)>& f, double a, double b, int panels) {
    double s = 0.0;
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) s += gauss_legendre(f, a + p * h, a + (p + 1) * h);
    return s;
}

/// (e^{-|.|}/2 * f)(x) on [-L, L], split at the kernel kink.
inline double kernel_convolution(const std::function<double(double)>& f, double x, double L,
                                 int panels = 64) {
    auto g = [&](double y) { return 0.5 * std::exp(-std::abs(x - y)) * f(y); };
    return composite_gl(g, -L, x, panels) + composite_gl(g, x, L, panels);
}

/// (-sgn(.) e^{-|.|}/2 * f)(x) on [-L, L].
inline double kernel_dx_convolution(const std::function<double(double)>& f, double x, double L,
                                    int panels = 64) {
    auto left = [&](double y) { return -0.5 * std::exp(-(x - y)) * f(y); };
    auto right = [&](double y) { return 0.5 * std::exp(-(y - x)) * f(y); };
    return composite_gl(left, -L, x, panels) + composite_gl(right, x, L, panels);
}

/// H^1 norm squared of e^{-n x^2} on the line.
inline double gaussian_h1_squared(double n) {
    return (n + 1.0) * std::sqrt(std::numbers::pi / (2.0 * n));
}

} // namespace oracle
