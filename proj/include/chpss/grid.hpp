#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace chpss {

enum class BoundaryMode {
    Periodic,       // x = -L identified with x = L; spectral calculus
    DecayTruncated, // data assumed to vanish beyond [-L, L); finite differences
};

const char* to_string(BoundaryMode mode);
BoundaryMode boundary_mode_from_string(const std::string& text);

namespace detail {
class FftPlan;
}

/// Uniform lattice x_j = -L + j*dx, j = 0..N-1, dx = 2L/N.
///
/// Copies share the same FFT plan, so a Grid is cheap to pass by value.
class Grid {
public:
    Grid(double half_width, std::size_t n_points, BoundaryMode mode = BoundaryMode::Periodic);

    double half_width() const noexcept { return half_width_; }
    std::size_t size() const noexcept { return n_; }
    double dx() const noexcept { return dx_; }
    BoundaryMode mode() const noexcept { return mode_; }
    bool periodic() const noexcept { return mode_ == BoundaryMode::Periodic; }
    double length() const noexcept { return 2.0 * half_width_; }

    double x(std::size_t j) const noexcept { return -half_width_ + static_cast<double>(j) * dx_; }
    std::vector<double> coordinates() const;

    /// Angular wavenumber of half-spectrum bin k (0 <= k <= N/2).
    double wavenumber(std::size_t k) const noexcept;
    std::size_t spectrum_size() const noexcept { return n_ / 2 + 1; }

    const detail::FftPlan& fft() const { return *plan_; }

    bool operator==(const Grid& other) const noexcept {
        return n_ == other.n_ && half_width_ == other.half_width_ && mode_ == other.mode_;
    }

private:
    double half_width_;
    std::size_t n_;
    double dx_;
    BoundaryMode mode_;
    std::shared_ptr<const detail::FftPlan> plan_;
};

namespace detail {

/// Real-to-complex transform pair for one lattice size. Execution is
/// thread-safe; plan creation is serialized internally.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);
    ~FftPlan();
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    /// Unnormalized forward transform, N/2+1 coefficients.
    void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
    /// Inverse transform including the 1/N factor. `in` is left untouched.
    void backward(std::span<const std::complex<double>> in, std::span<double> out) const;

    std::size_t size() const noexcept { return n_; }

private:
    std::size_t n_;
    void* r2c_;
    void* c2r_;
};

} // namespace detail

/// Real samples on a Grid.
class Field {
public:
    explicit Field(Grid grid);
    Field(Grid grid, std::vector<double> values);

    template <typename Fn>
    static Field sample(const Grid& grid, Fn&& fn) {
        std::vector<double> v(grid.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = fn(grid.x(j));
        return Field(grid, std::move(v));
    }

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    const std::vector<double>& data() const noexcept { return values_; }

    double operator[](std::size_t j) const noexcept { return values_[j]; }
    double& operator[](std::size_t j) noexcept { return values_[j]; }

    double max_abs() const noexcept;
    bool is_zero() const noexcept;

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double s);

private:
    Grid grid_;
    std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(Field a, double s);
Field operator*(double s, Field a);
/// Pointwise product.
Field hadamard(const Field& a, const Field& b);

/// Throws Fault(NonFinite) naming the first offending index.
void require_finite(const Field& f, const char* context);
void require_same_grid(const Field& a, const Field& b, const char* context);

} // namespace chpss
