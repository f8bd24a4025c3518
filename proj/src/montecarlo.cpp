#include "wvamp/montecarlo.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "wvamp/errors.hpp"

namespace wvamp::montecarlo {

namespace {

constexpr double kVanishingNorm = 1e-14;

std::uint32_t low_word(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
std::uint32_t high_word(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

engine::MeterWaveFunction final_meter_state(const GaussianModelPoint& model,
                                            Complex total_overlap) {
    const auto& params = model.params();
    const double g = model.coupling();
    const Complex t = params.relative_weak_value / params.lambda_r;
    const std::array<Complex, 2> coeffs{0.5 * total_overlap * (1.0 - t),
                                        0.5 * total_overlap * (1.0 + t)};
    const std::array<double, 2> values{params.lambda_low(), params.lambda_high()};
    const double max_shift = g * std::max(std::abs(values[0]), std::abs(values[1]));
    const auto grid = engine::GridSpec::default_for(model.meter().width(), max_shift);
    const auto initial = engine::build_gaussian(grid, model.meter().width());
    return engine::apply_transition(coeffs, values, g, initial);
}

} // namespace

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{low_word(seed), high_word(seed), low_word(index), high_word(index)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

InverseCdfSampler::InverseCdfSampler(std::vector<double> nodes, std::vector<double> weights,
                                     double spacing)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), spacing_(spacing) {
    if (nodes_.empty() || nodes_.size() != weights_.size()) {
        throw std::invalid_argument("sampler needs one weight per node");
    }
    if (!(spacing_ > 0.0)) throw std::invalid_argument("sampler spacing must be positive");
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("sampler weights must be finite and >= 0");
        }
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("sampler weights sum to zero");
    cumulative_.resize(weights_.size() + 1);
    cumulative_[0] = 0.0;
    for (std::size_t j = 0; j < weights_.size(); ++j) {
        weights_[j] /= total;
        cumulative_[j + 1] = cumulative_[j] + weights_[j];
        mean_ += weights_[j] * nodes_[j];
    }
}

double InverseCdfSampler::operator()(double u) const {
    const double target = u * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin() + 1, cumulative_.end(), target);
    if (it == cumulative_.end()) --it;
    auto j = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    // upper_bound lands on a cell with positive mass unless target hit the top
    while (weights_[j] == 0.0 && j > 0) --j;
    const double fraction = std::clamp((target - cumulative_[j]) / weights_[j], 0.0, 1.0);
    return nodes_[j] + spacing_ * (fraction - 0.5);
}

double InverseCdfSampler::cdf(double x) const {
    const double pos = (x - nodes_.front()) / spacing_ + 0.5;
    if (pos <= 0.0) return 0.0;
    const double cell = std::floor(pos);
    if (cell >= static_cast<double>(nodes_.size())) return 1.0;
    const auto j = static_cast<std::size_t>(cell);
    return cumulative_[j] + weights_[j] * (pos - cell);
}

std::optional<InverseCdfSampler> ExperimentSimulator::make_sampler(
    const engine::MeterWaveFunction& psi, Channel channel) {
    if (!(psi.norm2() > kVanishingNorm)) return std::nullopt;
    if (channel == Channel::q) {
        std::vector<double> nodes(psi.grid().n_points);
        for (std::size_t j = 0; j < nodes.size(); ++j) nodes[j] = psi.grid().x(j);
        return InverseCdfSampler(std::move(nodes), engine::position_weights(psi), psi.grid().dx());
    }
    auto density = engine::momentum_density(psi);
    return InverseCdfSampler(std::move(density.nodes), std::move(density.weights),
                             density.spacing);
}

const InverseCdfSampler& ExperimentSimulator::sampler() const {
    if (!sampler_) throw VanishingState("postselected meter state vanishes; nothing to sample");
    return *sampler_;
}

ExperimentSimulator::ExperimentSimulator(const MeasurementConfig& cfg,
                                         const GaussianModelPoint& model,
                                         Complex total_overlap, Channel channel)
    : ExperimentSimulator(cfg, model, channel, final_meter_state(model, total_overlap)) {}

ExperimentSimulator::ExperimentSimulator(const MeasurementConfig& cfg,
                                         const GaussianModelPoint& model, Channel channel,
                                         const engine::MeterWaveFunction& psi_f)
    : cfg_(cfg),
      survival_rate_(0.0),
      initial_expectation_(0.0),
      final_expectation_(0.0),
      scale_(channel == Channel::q ? model.coupling() : model.momentum_scale()),
      delta_(channel == Channel::q ? cfg.delta_q : cfg.delta_p),
      sampler_(make_sampler(psi_f, channel)) {
    cfg_.validate();
    if (cfg_.coupling == 0.0) throw ZeroCoupling("coupling g = 0 leaves nothing to estimate");
    if (model.coupling() != cfg_.coupling) {
        throw std::invalid_argument("model point and configuration disagree on g");
    }
    const auto psi_i = engine::build_gaussian(psi_f.grid(), model.meter().width());
    const auto initial = engine::raw_moments(psi_i);
    initial_expectation_ =
        channel == Channel::q ? initial.q1 / initial.norm2 : initial.p1 / initial.norm2;
    if (sampler_) {
        survival_rate_ = std::clamp(psi_f.norm2() / initial.norm2, 0.0, 1.0);
        final_expectation_ = sampler_->mean();
    } else {
        final_expectation_ = std::numeric_limits<double>::quiet_NaN();
    }
}

ExperimentDraw ExperimentSimulator::draw(double bias, std::uint64_t seed) const {
    if (!(std::abs(bias) <= delta_)) {
        throw std::invalid_argument("|bias| must not exceed the channel's delta");
    }
    std::mt19937_64 rng(seed);
    std::binomial_distribution<std::int64_t> survivors(cfg_.n0, survival_rate_);
    ExperimentDraw out;
    out.seed = seed;
    out.n_survived = survivors(rng);
    out.readings.reserve(static_cast<std::size_t>(out.n_survived));
    double sum = 0.0;
    for (std::int64_t n = 0; n < out.n_survived; ++n) {
        const double reading = (*sampler_)(uniform01(rng)) + bias;
        out.readings.push_back(reading);
        sum += reading;
    }
    out.estimator = out.n_survived == 0
                        ? std::numeric_limits<double>::quiet_NaN()
                        : (sum / static_cast<double>(out.n_survived) - initial_expectation_) /
                              scale_;
    return out;
}

ExperimentDraw ExperimentSimulator::run(double bias, std::uint64_t seed) const {
    auto out = draw(bias, seed);
    if (out.n_survived == 0) {
        throw AllRejected("no prepared pair survived postselection");
    }
    return out;
}

ExperimentDraw run_experiment(const MeasurementConfig& cfg, const GaussianModelPoint& model,
                              Complex total_overlap, Channel channel, double bias,
                              std::uint64_t seed) {
    return ExperimentSimulator(cfg, model, total_overlap, channel).run(bias, seed);
}

CoverageReport coverage_test(const MeasurementConfig& cfg, const GaussianModelPoint& model,
                             Complex total_overlap, Channel channel, std::int64_t trials,
                             std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    const ExperimentSimulator sim(cfg, model, total_overlap, channel);
    const bool is_q = channel == Channel::q;
    const auto budget = is_q ? weak_uncertainty_q(cfg, model, total_overlap)
                             : weak_uncertainty_p(cfg, model, total_overlap);
    const double variance = is_q ? variance_q(model) : variance_p(model);
    const BinomialWeights weights(cfg.n0, budget.survival_rate);
    const double bias = is_q ? cfg.delta_q : cfg.delta_p;
    const Complex aw = model.params().weak_value;
    const double target = is_q ? aw.real() : aw.imag();

    CoverageReport report;
    report.trials = trials;
    report.kappa = budget.kappa;
    report.epsilon = budget.total;
    report.bound = budget.kappa > 0.0 ? pi_average(weights, budget.kappa, variance)
                                      : weights.supremum();
    for (std::int64_t t = 0; t < trials; ++t) {
        const auto d = sim.draw(bias, trial_seed(seed, static_cast<std::uint64_t>(t)));
        if (d.n_survived == 0) {
            ++report.all_rejected;
            continue;
        }
        const double mean = d.estimator * sim.scale() + sim.initial_expectation();
        if (std::abs(mean - bias - sim.final_expectation()) <= report.kappa) ++report.hits;
        if (std::abs(d.estimator - target) <= report.epsilon) ++report.budget_hits;
    }
    const auto n = static_cast<double>(trials);
    report.empirical_coverage = static_cast<double>(report.hits) / n;
    report.budget_coverage = static_cast<double>(report.budget_hits) / n;
    report.tolerance = 3.0 * std::sqrt(report.bound * (1.0 - report.bound) / n);
    report.passed = report.empirical_coverage >= report.bound - report.tolerance;
    return report;
}

double chi_square_p_value(std::span<const std::uint64_t> observed,
                          std::span<const double> probabilities) {
    if (observed.size() != probabilities.size() || observed.size() < 2) {
        throw std::invalid_argument("need matching observed/probability bins, at least 2");
    }
    const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
    const double mass = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    if (!(total > 0.0) || !(mass > 0.0)) throw std::invalid_argument("empty histogram");
    double chi2 = 0.0;
    std::size_t bins = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double expected = total * probabilities[i] / mass;
        if (expected <= 0.0) {
            if (observed[i] != 0) return 0.0;
            continue;
        }
        const double diff = static_cast<double>(observed[i]) - expected;
        chi2 += diff * diff / expected;
        ++bins;
    }
    return boost::math::gamma_q(0.5 * static_cast<double>(bins - 1), 0.5 * chi2);
}

} // namespace wvamp::montecarlo
