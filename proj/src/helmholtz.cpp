#include "chpss/helmholtz.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "chpss/calculus.hpp"
#include "chpss/fault.hpp"

namespace chpss {

const char* to_string(KernelMethod method) {
    return method == KernelMethod::SpectralMultiplier ? "spectral" : "two_pass";
}

KernelMethod kernel_method_from_string(const std::string& text) {
    if (text == "spectral" || text == "spectral-multiplier") return KernelMethod::SpectralMultiplier;
    if (text == "two_pass" || text == "two-pass" || text == "two-pass-exponential") {
        return KernelMethod::TwoPassExponential;
    }
    throw Fault(FaultKind::InvalidArgument, "unknown kernel method '" + text + "'");
}

namespace {

using cplx = std::complex<double>;

void require_periodic(const Field& f, const char* op) {
    if (!f.grid().periodic()) {
        throw Fault(FaultKind::InvalidArgument,
                    std::string(op) + ": spectral-multiplier kernel needs a periodic grid");
    }
}

Field spectral_apply(const Field& f, bool differentiate) {
    const Grid& g = f.grid();
    std::vector<cplx> spec(g.spectrum_size());
    g.fft().forward(f.values(), spec);
    const std::size_t nyq = g.size() / 2;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double xi = g.wavenumber(k);
        const double symbol = 1.0 / (1.0 + xi * xi);
        if (differentiate) {
            spec[k] = (k == nyq) ? cplx(0.0) : spec[k] * cplx(0.0, xi * symbol);
        } else {
            spec[k] *= symbol;
        }
    }
    Field out(g);
    g.fft().backward(spec, out.values());
    return out;
}

// left[j]  = sum_{i<j} e^{-(x_j - x_i)} f_i
// right[j] = sum_{i>j} e^{-(x_i - x_j)} f_i
struct ExponentialSums {
    std::vector<double> left;
    std::vector<double> right;
};

ExponentialSums exponential_sums(const Field& f) {
    const std::size_t n = f.size();
    const double decay = std::exp(-f.grid().dx());
    ExponentialSums s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (std::size_t j = 1; j < n; ++j) s.left[j] = decay * (s.left[j - 1] + f[j - 1]);
    for (std::size_t j = n - 1; j-- > 0;) s.right[j] = decay * (s.right[j + 1] + f[j + 1]);
    return s;
}

Field two_pass_apply(const Field& f, bool differentiate) {
    const double h = f.grid().dx();
    const double h2 = h * h / 12.0;
    const double h4 = h * h * h * h / 720.0;
    const auto sums = exponential_sums(f);
    Field out(f.grid());
    if (!differentiate) {
        const Field f2 = fd_derivative(f, 2);
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double trap = 0.5 * h * (sums.left[j] + f[j] + sums.right[j]);
            out[j] = trap - h2 * f[j] + h4 * (f[j] + 3.0 * f2[j]);
        }
    } else {
        const Field f1 = fd_derivative(f, 1);
        const Field f3 = fd_derivative(f, 3);
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double trap = 0.5 * h * (sums.right[j] - sums.left[j]);
            out[j] = trap + h2 * f1[j] - h4 * (3.0 * f1[j] + f3[j]);
        }
    }
    return out;
}

} // namespace

Field helmholtz_inverse(const Field& f, KernelMethod method) {
    require_finite(f, "helmholtz_inverse");
    if (method == KernelMethod::SpectralMultiplier) {
        require_periodic(f, "helmholtz_inverse");
        return spectral_apply(f, false);
    }
    return two_pass_apply(f, false);
}

Field dx_helmholtz_inverse(const Field& f, KernelMethod method) {
    require_finite(f, "dx_helmholtz_inverse");
    if (method == KernelMethod::SpectralMultiplier) {
        require_periodic(f, "dx_helmholtz_inverse");
        return spectral_apply(f, true);
    }
    return two_pass_apply(f, true);
}

Field momentum(const Field& u) { return u - derivative(u, 2); }

Field velocity_from_momentum(const Field& m0, KernelMethod method) { return helmholtz_inverse(m0, method); }

} // namespace chpss
