#pragma once

#include "wvamp/core.hpp"

namespace wvamp {

/// Meter prepared in psi_i(x) = (1 / pi d^2)^{1/4} exp(-x^2 / 2d^2).
/// E_Q = E_P = 0, Var_Q = d^2 / 2, Var_P = 1 / (2 d^2), and the {Q,P}
/// cross term vanishes.
class GaussianMeter {
public:
    explicit GaussianMeter(double width);

    [[nodiscard]] double width() const noexcept { return width_; }
    [[nodiscard]] double variance_q() const noexcept { return 0.5 * width_ * width_; }
    [[nodiscard]] double variance_p() const noexcept { return 0.5 / (width_ * width_); }

private:
    double width_;
};

/// One (coupling, selection, meter) point of the two-point Gaussian model.
///
/// Caches the recurring factors s = exp(-g^2 Lambda_r^2 / d^2) and
/// denominator = 1 + a (1 - s). `one_minus_decay()` is evaluated with expm1 so
/// that the weak limit keeps full relative precision.
class GaussianModelPoint {
public:
    GaussianModelPoint(double coupling, TwoPointParameters params, GaussianMeter meter);

    [[nodiscard]] double coupling() const noexcept { return coupling_; }
    [[nodiscard]] const TwoPointParameters& params() const noexcept { return params_; }
    [[nodiscard]] const GaussianMeter& meter() const noexcept { return meter_; }
    [[nodiscard]] double decay() const noexcept { return decay_; }
    [[nodiscard]] double one_minus_decay() const noexcept { return one_minus_decay_; }
    [[nodiscard]] double denominator() const noexcept { return denominator_; }

    /// g / d^2, the P-channel counterpart of g.
    [[nodiscard]] double momentum_scale() const noexcept {
        return coupling_ / (meter_.width() * meter_.width());
    }

private:
    double coupling_;
    TwoPointParameters params_;
    GaussianMeter meter_;
    double decay_;
    double one_minus_decay_;
    double denominator_;
};

/// r = |<phi_f|phi_i>|^2 [1 + a (1 - s)]
double survival_rate(const GaussianModelPoint& pt, Complex total_overlap);

/// Delta_Q^w = g Re A_r / denominator + g Lambda_m
double shift_q(const GaussianModelPoint& pt);

/// Delta_P^w = (g / d^2) Im A_r s / denominator
double shift_p(const GaussianModelPoint& pt);

/// Var_Q(psi_f); throws NonPositiveVariance if the evaluation is not positive.
double variance_q(const GaussianModelPoint& pt);

/// Var_P(psi_f); throws NonPositiveVariance if the evaluation is not positive.
double variance_p(const GaussianModelPoint& pt);

struct ConventionalStats {
    double shift_q = 0.0;
    double variance_q = 0.0;
    double shift_p = 0.0;
    double variance_p = 0.0;
};

/// Meter statistics without postselection: shift g E_A, variance d^2/2 + g^2 Var_A;
/// the momentum channel is unaffected (0, 1 / (2 d^2)).
ConventionalStats conventional_stats(const SystemState& pre, const FiniteObservable& obs,
                                     double coupling, const GaussianMeter& meter);

} // namespace wvamp
