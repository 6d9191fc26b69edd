#include "chpss/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "chpss/fault.hpp"

namespace chpss {

const char* to_string(FaultKind kind) {
    switch (kind) {
        case FaultKind::InvalidArgument: return "invalid_argument";
        case FaultKind::Unsupported: return "unsupported_operation";
        case FaultKind::Config: return "config_fault";
        case FaultKind::Tail: return "tail_fault";
        case FaultKind::NonFinite: return "nan_fault";
        case FaultKind::Anomaly: return "anomaly";
        case FaultKind::Io: return "io_fault";
    }
    return "unknown";
}

const char* to_string(BoundaryMode mode) {
    return mode == BoundaryMode::Periodic ? "periodic" : "decay-truncated";
}

BoundaryMode boundary_mode_from_string(const std::string& text) {
    if (text == "periodic") return BoundaryMode::Periodic;
    if (text == "decay-truncated" || text == "decay") return BoundaryMode::DecayTruncated;
    throw Fault(FaultKind::InvalidArgument, "unknown boundary mode '" + text + "'");
}

namespace detail {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

FftPlan::FftPlan(std::size_t n) : n_(n) {
    std::lock_guard lock(planner_mutex());
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    const int ni = static_cast<int>(n);
    r2c_ = fftw_plan_dft_r2c_1d(ni, in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
    c2r_ = fftw_plan_dft_c2r_1d(ni, out, in, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
}

FftPlan::~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(r2c_));
    fftw_destroy_plan(static_cast<fftw_plan>(c2r_));
}

void FftPlan::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
    // FFTW does not modify the input of an out-of-place r2c transform.
    fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_), const_cast<double*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
}

void FftPlan::backward(std::span<const std::complex<double>> in, std::span<double> out) const {
    // c2r destroys its input, so work on a copy.
    std::vector<std::complex<double>> scratch(in.begin(), in.end());
    fftw_execute_dft_c2r(static_cast<fftw_plan>(c2r_), reinterpret_cast<fftw_complex*>(scratch.data()),
                         out.data());
    const double inv = 1.0 / static_cast<double>(n_);
    for (double& v : out) v *= inv;
}

} // namespace detail

Grid::Grid(double half_width, std::size_t n_points, BoundaryMode mode)
    : half_width_(half_width), n_(n_points), dx_(0.0), mode_(mode) {
    if (!(half_width > 0.0) || !std::isfinite(half_width)) {
        throw Fault(FaultKind::InvalidArgument, "grid half-width must be positive and finite");
    }
    if (n_points < 16) {
        throw Fault(FaultKind::InvalidArgument, "grid needs at least 16 points");
    }
    if (n_points % 2 != 0) {
        throw Fault(FaultKind::InvalidArgument, "grid point count must be even");
    }
    dx_ = 2.0 * half_width / static_cast<double>(n_points);
    plan_ = std::make_shared<detail::FftPlan>(n_points);
}

std::vector<double> Grid::coordinates() const {
    std::vector<double> xs(n_);
    for (std::size_t j = 0; j < n_; ++j) xs[j] = x(j);
    return xs;
}

double Grid::wavenumber(std::size_t k) const noexcept {
    return 2.0 * std::numbers::pi * static_cast<double>(k) / length();
}

Field::Field(Grid grid) : grid_(std::move(grid)), values_(grid_.size(), 0.0) {}

Field::Field(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        std::ostringstream os;
        os << "field length " << values_.size() << " does not match grid size " << grid_.size();
        throw Fault(FaultKind::InvalidArgument, os.str());
    }
}

double Field::max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

bool Field::is_zero() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

Field& Field::operator+=(const Field& other) {
    require_same_grid(*this, other, "field addition");
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += other.values_[j];
    return *this;
}

Field& Field::operator-=(const Field& other) {
    require_same_grid(*this, other, "field subtraction");
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= other.values_[j];
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(Field a, double s) { return a *= s; }
Field operator*(double s, Field a) { return a *= s; }

Field hadamard(const Field& a, const Field& b) {
    require_same_grid(a, b, "pointwise product");
    Field out(a.grid());
    for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] * b[j];
    return out;
}

void require_finite(const Field& f, const char* context) {
    for (std::size_t j = 0; j < f.size(); ++j) {
        if (!std::isfinite(f[j])) {
            std::ostringstream os;
            os << context << ": non-finite value at index " << j << " (x = " << f.grid().x(j) << ")";
            throw Fault(FaultKind::NonFinite, os.str());
        }
    }
}

void require_same_grid(const Field& a, const Field& b, const char* context) {
    if (!(a.grid() == b.grid())) {
        throw Fault(FaultKind::InvalidArgument, std::string(context) + ": fields live on different grids");
    }
}

} // namespace chpss
