#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wvamp/core.hpp"

namespace wvamp::engine {

/// Uniform periodic grid x_j = x_min + j dx, j = 0 .. n_points - 1, with
/// dx = (x_max - x_min) / n_points. x_max itself is the image of x_min.
struct GridSpec {
    double x_min = -1.0;
    double x_max = 1.0;
    std::size_t n_points = 256;

    /// Throws std::invalid_argument unless x_max > x_min and n_points is a
    /// power of two >= 256.
    void validate() const;

    [[nodiscard]] double dx() const noexcept {
        return (x_max - x_min) / static_cast<double>(n_points);
    }
    [[nodiscard]] double x(std::size_t j) const noexcept {
        return x_min + static_cast<double>(j) * dx();
    }

    /// Symmetric grid of half-width 8d + max_shift + 8d with the smallest
    /// power-of-two size (>= 256) giving dx <= d / 32.
    static GridSpec default_for(double width, double max_shift);
};

/// Angular wavenumbers of the discrete Fourier modes in FFT order:
/// p_k = 2 pi k / (n dx) for k < n/2, and k - n for k >= n/2.
std::vector<double> momentum_grid(const GridSpec& grid);

/// Sampled meter wavefunction. Samples are immutable after construction.
class MeterWaveFunction {
public:
    /// Throws std::invalid_argument for a size mismatch or non-finite samples,
    /// GridTooNarrow when |psi| >= kEdgeDecay at either grid edge.
    MeterWaveFunction(GridSpec grid, std::vector<Complex> samples);

    [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }
    [[nodiscard]] std::span<const Complex> samples() const noexcept { return samples_; }
    [[nodiscard]] double norm2() const noexcept { return norm2_; }

private:
    GridSpec grid_;
    std::vector<Complex> samples_;
    double norm2_;
};

/// Edge amplitude threshold, also used to delimit the support for shifts.
inline constexpr double kEdgeDecay = 1e-12;

/// (1 / pi d^2)^{1/4} exp(-x^2 / 2 d^2) on `grid`.
MeterWaveFunction build_gaussian(const GridSpec& grid, double width);

/// psi_f(x) = sum_n c_n psi(x - g lambda_n), each translation applied as the
/// phase exp(-i g lambda_n p) in Fourier space. The result is not normalized.
/// Throws ShiftOutOfGrid when a shifted support would reach the grid edges.
MeterWaveFunction apply_transition(std::span<const Complex> coeffs,
                                   std::span<const double> eigenvalues, double coupling,
                                   const MeterWaveFunction& psi);

/// Unnormalized moments: integral of |psi|^2, x |psi|^2, x^2 |psi|^2 and the
/// momentum-space counterparts, all on the same |psi|^2 measure.
struct RawMoments {
    double norm2 = 0.0;
    double q1 = 0.0;
    double q2 = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;
};

RawMoments raw_moments(const MeterWaveFunction& psi);

struct MeterStatistics {
    double norm2 = 0.0;
    double e_q = 0.0;
    double e_p = 0.0;
    double var_q = 0.0;
    double var_p = 0.0;
};

/// Normalized expectations and variances. Throws VanishingState for
/// norm2 <= 1e-14 and std::logic_error for a variance below -1e-10.
MeterStatistics meter_statistics(const MeterWaveFunction& psi);

/// Position density |psi(x_j)|^2 dx per grid cell.
std::vector<double> position_weights(const MeterWaveFunction& psi);

/// Momentum nodes in increasing order and the matching cell masses of the
/// discrete Fourier density, normalized to the position-space norm.
struct MomentumDensity {
    std::vector<double> nodes;
    std::vector<double> weights;
    double spacing = 0.0;
};

MomentumDensity momentum_density(const MeterWaveFunction& psi);

struct BasisAverage {
    double shift_q = 0.0;
    double shift_p = 0.0;
};

/// sum_f r(phi_i -> phi_f) Delta_X(phi_f) over a complete orthonormal basis,
/// evaluated on the grid. Throws NonOrthonormalBasis when the basis deviates
/// from orthonormality by more than 1e-10 or does not span the space.
BasisAverage basis_average_check(const SystemState& pre, const FiniteObservable& obs,
                                 std::span<const SystemState> basis, double coupling,
                                 const MeterWaveFunction& psi);

/// Meter statistics after the interaction without postselection: the
/// mixture of psi translated by g lambda_n with weights <phi_i|E_n|phi_i>.
MeterStatistics conventional_meter_statistics(const SystemState& pre,
                                              const FiniteObservable& obs, double coupling,
                                              const MeterWaveFunction& psi);

} // namespace wvamp::engine
