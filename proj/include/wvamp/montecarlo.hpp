#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "wvamp/core.hpp"
#include "wvamp/engine.hpp"
#include "wvamp/gaussian.hpp"
#include "wvamp/uncertainty.hpp"

namespace wvamp::montecarlo {

enum class Channel { q, p };

struct ExperimentDraw {
    std::int64_t n_survived = 0;
    std::vector<double> readings;
    double estimator = 0.0;  ///< (mean reading - E_X(psi_i)) / scale
    std::uint64_t seed = 0;
};

struct CoverageReport {
    std::int64_t trials = 0;
    std::int64_t hits = 0;             ///< |mean - bias - E_X(psi_f)| <= kappa
    double empirical_coverage = 0.0;   ///< hits / trials
    double bound = 0.0;                ///< Pi(kappa)
    double kappa = 0.0;
    std::int64_t budget_hits = 0;      ///< |estimator - weak value part| <= epsilon
    double budget_coverage = 0.0;
    double epsilon = 0.0;
    std::int64_t all_rejected = 0;     ///< trials with no survivor, counted as misses
    double tolerance = 0.0;            ///< 3 sqrt(bound (1 - bound) / trials)
    bool passed = false;               ///< empirical_coverage >= bound - tolerance
};

/// Uniform double in [0, 1) from the top 53 bits of one generator output.
double uniform01(std::mt19937_64& rng);

/// Per-trial seed derived from (seed, index) through std::seed_seq.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index);

/// Inverse-CDF sampler for a tabulated density: cell j carries mass
/// weights[j] spread uniformly over [node_j - h/2, node_j + h/2]. The CDF is
/// therefore piecewise linear and the sample mean matches the discrete mean.
class InverseCdfSampler {
public:
    InverseCdfSampler(std::vector<double> nodes, std::vector<double> weights, double spacing);

    /// Quantile at u in [0, 1).
    [[nodiscard]] double operator()(double u) const;

    [[nodiscard]] double cdf(double x) const;
    [[nodiscard]] double mean() const noexcept { return mean_; }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> cumulative_;  // size n + 1, cumulative_[0] = 0
    double spacing_;
    double mean_ = 0.0;
};

/// Simulates the protocol for one (configuration, model point, channel):
/// N ~ Binomial(N0, r) survivors, each reading drawn from the grid density of
/// psi_f in the chosen representation, then offset by a constant bias.
class ExperimentSimulator {
public:
    /// psi_f is rebuilt on the engine grid from the model point and the total
    /// overlap: c_1,2 = <phi_f|phi_i> (1 -/+ A_r / Lambda_r) / 2. A state with
    /// norm^2 <= 1e-14 is treated as r = 0, so every draw is rejected.
    ExperimentSimulator(const MeasurementConfig& cfg, const GaussianModelPoint& model,
                        Complex total_overlap, Channel channel);

    /// Throws AllRejected when no pair survives.
    [[nodiscard]] ExperimentDraw run(double bias, std::uint64_t seed) const;

    /// Like run() but returns n_survived = 0 and a NaN estimator instead of throwing.
    [[nodiscard]] ExperimentDraw draw(double bias, std::uint64_t seed) const;

    [[nodiscard]] double survival_rate() const noexcept { return survival_rate_; }
    [[nodiscard]] double initial_expectation() const noexcept { return initial_expectation_; }
    [[nodiscard]] double final_expectation() const noexcept { return final_expectation_; }
    [[nodiscard]] double scale() const noexcept { return scale_; }
    /// Throws VanishingState when psi_f vanishes on the grid (r treated as 0).
    [[nodiscard]] const InverseCdfSampler& sampler() const;

private:
    ExperimentSimulator(const MeasurementConfig& cfg, const GaussianModelPoint& model,
                        Channel channel, const engine::MeterWaveFunction& psi_f);

    static std::optional<InverseCdfSampler> make_sampler(const engine::MeterWaveFunction& psi,
                                                         Channel channel);

    MeasurementConfig cfg_;
    double survival_rate_;
    double initial_expectation_;
    double final_expectation_;
    double scale_;
    double delta_;
    std::optional<InverseCdfSampler> sampler_;
};

ExperimentDraw run_experiment(const MeasurementConfig& cfg, const GaussianModelPoint& model,
                              Complex total_overlap, Channel channel, double bias,
                              std::uint64_t seed);

/// Runs `trials` experiments with bias +delta of the channel and counts the
/// statistical event bounded by Pi(kappa), kappa = kappa_inverse(eta).
CoverageReport coverage_test(const MeasurementConfig& cfg, const GaussianModelPoint& model,
                             Complex total_overlap, Channel channel, std::int64_t trials,
                             std::uint64_t seed);

/// Upper tail of the chi-square statistic of `observed` counts against
/// `probabilities`, with (bins - 1) degrees of freedom.
double chi_square_p_value(std::span<const std::uint64_t> observed,
                          std::span<const double> probabilities);

} // namespace wvamp::montecarlo
