#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace wvamp {

using Complex = std::complex<double>;

/// Guard on |<phi_f|phi_i>| below which a weak value is treated as undefined.
inline constexpr double kOrthoEps = 1e-10;

/// Normalized pure state of the measured system, dimension >= 2.
class SystemState {
public:
    /// Throws std::invalid_argument unless the squared norm is 1 within 1e-12.
    explicit SystemState(Eigen::VectorXcd amplitudes);

    /// Normalizes `v` first; throws std::invalid_argument for a zero vector.
    static SystemState normalized(Eigen::VectorXcd v);
    static SystemState basis(Eigen::Index dimension, Eigen::Index index);

    [[nodiscard]] const Eigen::VectorXcd& amplitudes() const noexcept { return amplitudes_; }
    [[nodiscard]] Eigen::Index dimension() const noexcept { return amplitudes_.size(); }

    /// <this|other>
    [[nodiscard]] Complex inner(const SystemState& other) const {
        return amplitudes_.dot(other.amplitudes_);
    }

private:
    Eigen::VectorXcd amplitudes_;
};

/// Observable with finite spectrum, given by its spectral decomposition
/// A = sum_n lambda_n E_n. Eigenvalues are strictly increasing and distinct;
/// the projectors are Hermitian, idempotent, mutually orthogonal and resolve
/// the identity (checked entrywise to 1e-12).
class FiniteObservable {
public:
    FiniteObservable(std::vector<double> eigenvalues, std::vector<Eigen::MatrixXcd> projectors);

    /// Diagonal observable in the computational basis; equal entries share a
    /// projector.
    static FiniteObservable diagonal(std::span<const double> entries);

    /// Closed-form diagonalization of a 2x2 Hermitian matrix with distinct
    /// eigenvalues.
    static FiniteObservable from_hermitian(const Eigen::Matrix2cd& matrix);

    [[nodiscard]] const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
    [[nodiscard]] const std::vector<Eigen::MatrixXcd>& projectors() const noexcept {
        return projectors_;
    }
    [[nodiscard]] std::size_t spectrum_size() const noexcept { return eigenvalues_.size(); }
    [[nodiscard]] Eigen::Index dimension() const noexcept { return projectors_.front().rows(); }

    /// sum_n lambda_n E_n
    [[nodiscard]] Eigen::MatrixXcd matrix() const;

    /// A + t * Id
    [[nodiscard]] FiniteObservable translated(double t) const;
    /// factor * A, factor > 0
    [[nodiscard]] FiniteObservable scaled(double factor) const;
    /// U A U^dagger for unitary U
    [[nodiscard]] FiniteObservable rotated(const Eigen::MatrixXcd& unitary) const;

private:
    std::vector<double> eigenvalues_;
    std::vector<Eigen::MatrixXcd> projectors_;
};

/// c_n = <phi_f|E_n|phi_i>, and their sum <phi_f|phi_i>.
struct OverlapCoefficients {
    std::vector<Complex> c;
    Complex total_overlap;
};

/// Two-point-spectrum shorthands. `relative_weak_value` is A_r = A_w - Lambda_m
/// and `amplification` is a = (|A_r|^2 / Lambda_r^2 - 1) / 2 >= -1/2.
struct TwoPointParameters {
    double lambda_m = 0.0;
    double lambda_r = 0.0;
    Complex weak_value;
    Complex relative_weak_value;
    double amplification = 0.0;

    [[nodiscard]] double lambda_low() const noexcept { return lambda_m - lambda_r; }
    [[nodiscard]] double lambda_high() const noexcept { return lambda_m + lambda_r; }
};

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

/// <phi_f|A|phi_i> / <phi_f|phi_i>. Throws OrthogonalSelections.
Complex weak_value(const SystemState& pre, const SystemState& post, const FiniteObservable& obs);

/// Normalized c|phi_i> + |chi>, where A|phi_i> = E_A|phi_i> + sqrt(Var_A)|chi>.
/// The weak value of the result is E_A + sqrt(Var_A) / conj(c).
/// Throws EigenstatePreselection when Var_A <= 1e-14, std::invalid_argument for c == 0.
SystemState amplified_postselection(const SystemState& pre, const FiniteObservable& obs, Complex c);

OverlapCoefficients overlap_coefficients(const SystemState& pre, const SystemState& post,
                                         const FiniteObservable& obs);

/// Requires exactly two coefficients and lambda1 < lambda2. Throws OrthogonalSelections.
TwoPointParameters two_point_parameters(const OverlapCoefficients& coeffs, double lambda1,
                                        double lambda2);

/// Convenience overload reading the eigenvalues from `obs`.
TwoPointParameters two_point_parameters(const OverlapCoefficients& coeffs,
                                        const FiniteObservable& obs);

/// (E_A, Var_A) of a normalized state.
Moments expectation_and_variance(const SystemState& state, const FiniteObservable& obs);

} // namespace wvamp
