#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wvamp/core.hpp"
#include "wvamp/gaussian.hpp"

namespace wvamp {

/// Margin kept below the supremum 1 - Bi[0; N0, r] when inverting Pi.
inline constexpr double kDomainEps = 1e-9;

/// Largest N0 for which `BinomialSummation::automatic` sums every term.
inline constexpr std::int64_t kExactBinomialLimit = 100'000;

struct MeasurementConfig {
    double coupling = 0.0;   ///< g >= 0
    double delta_q = 0.0;    ///< systematic error bound on Q readings
    double delta_p = 0.0;    ///< systematic error bound on P readings
    std::int64_t n0 = 1;     ///< number of prepared pairs
    double eta = 0.5;        ///< confidence, in (0, 1)

    /// Throws std::invalid_argument naming the first offending field.
    void validate() const;
};

/// epsilon = systematic + statistical + nonlinear. `kappa` is the raw
/// statistical error in meter units, before division by g (or g / d^2).
struct UncertaintyBreakdown {
    double systematic = 0.0;
    double statistical = 0.0;
    double nonlinear = 0.0;
    double total = 0.0;
    double kappa = 0.0;
    double survival_rate = 1.0;
};

/// Per-channel significance result. `reason` is empty when the uncertainty is
/// defined, otherwise an Error::code() token and `margin` is -infinity.
struct ChannelVerdict {
    bool significant = false;
    double margin = 0.0;  ///< |target| - epsilon
    std::string reason;
    std::optional<UncertaintyBreakdown> breakdown;
};

struct SignificanceVerdict {
    Complex weak_value;
    double expectation = 0.0;  ///< E_A(phi_i)
    ChannelVerdict conventional_q;
    ChannelVerdict weak_q;
    ChannelVerdict weak_p;
};

/// max(1 - variance / (n kappa^2), 0)
double chebyshev_bound(double variance, std::int64_t n, double kappa);

enum class BinomialSummation {
    automatic,  ///< exact up to kExactBinomialLimit, truncated beyond
    exact,      ///< every N in [0, N0]
    truncated,  ///< window around the mean, discarded tail mass < 1e-16
};

/// Binomial probabilities Bi[N; N0, r] on a contiguous window of N.
///
/// Terms are built in log space from the mode with the ratio recurrence
/// Bi[N+1]/Bi[N] = (N0 - N)/(N + 1) * r/(1 - r) and normalized by their sum, so
/// no factorial or lgamma of N0 is ever formed. The truncated window covers
/// at least mean +/- 9 sigma and is widened until a geometric bound on each
/// discarded tail falls below 1e-16 of the mode weight.
class BinomialWeights {
public:
    BinomialWeights(std::int64_t n0, double r,
                    BinomialSummation mode = BinomialSummation::automatic);

    [[nodiscard]] std::int64_t n0() const noexcept { return n0_; }
    [[nodiscard]] double rate() const noexcept { return rate_; }
    [[nodiscard]] std::int64_t first() const noexcept { return first_; }
    [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }

    /// 1 - Bi[0; N0, r], the limit of Pi as kappa -> infinity.
    [[nodiscard]] double supremum() const noexcept { return supremum_; }

private:
    std::int64_t n0_;
    double rate_;
    std::int64_t first_ = 0;
    std::vector<double> weights_;
    double supremum_ = 0.0;
};

/// 1 - (1 - r)^N0, evaluated as -expm1(N0 log1p(-r)).
double pi_supremum(std::int64_t n0, double r);

/// Pi(kappa) = sum_{N=1}^{N0} Bi[N; N0, r] max(1 - variance / (N kappa^2), 0)
double pi_average(const BinomialWeights& weights, double kappa, double variance);
double pi_average(double kappa, std::int64_t n0, double r, double variance,
                  BinomialSummation mode = BinomialSummation::automatic);

/// Smallest kappa with Pi(kappa) >= eta, by bracketed bisection carried to
/// adjacent doubles. Throws EtaOutOfDomain when eta >= 1 - Bi[0] - kDomainEps.
/// Returns 0 for zero variance.
double kappa_inverse(double eta, const BinomialWeights& weights, double variance);
double kappa_inverse(double eta, std::int64_t n0, double r, double variance,
                     BinomialSummation mode = BinomialSummation::automatic);

/// delta_Q / g + sqrt((Var_Q(psi_i) + g^2 Var_A) / (g^2 N0 (1 - eta))).
/// Throws ZeroCoupling for g = 0.
UncertaintyBreakdown conventional_uncertainty(const MeasurementConfig& cfg,
                                              const SystemState& pre,
                                              const FiniteObservable& obs,
                                              const GaussianMeter& meter);

/// |Delta_Q^w / g - Re A_w| in closed form: |Re A_r| |a (1 - s) / denominator|.
double nonlinear_term_q(const GaussianModelPoint& pt);

/// |Delta_P^w / (g/d^2) - Im A_w| in closed form: |Im A_r| |(1 + a)(1 - s) / denominator|.
double nonlinear_term_p(const GaussianModelPoint& pt);

/// Full weak-measurement budget for Re A_w. Throws ZeroCoupling, EtaOutOfDomain,
/// NonPositiveVariance.
UncertaintyBreakdown weak_uncertainty_q(const MeasurementConfig& cfg,
                                        const GaussianModelPoint& pt, Complex total_overlap);

/// Full weak-measurement budget for Im A_w, in units of g / d^2.
UncertaintyBreakdown weak_uncertainty_p(const MeasurementConfig& cfg,
                                        const GaussianModelPoint& pt, Complex total_overlap);

/// Evaluates the conventional and weak significance conditions for a
/// two-point observable. Domain failures of the weak channels are reported in
/// the verdict; ZeroCoupling and OrthogonalSelections propagate.
SignificanceVerdict significance(const MeasurementConfig& cfg, const SystemState& pre,
                                 const FiniteObservable& obs, const GaussianMeter& meter,
                                 const SystemState& post);

} // namespace wvamp
