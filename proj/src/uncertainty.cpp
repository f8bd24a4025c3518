#include "wvamp/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "wvamp/errors.hpp"

namespace wvamp {

namespace {

constexpr double kWindowSigmas = 9.0;
constexpr double kTailBound = 1e-16;
constexpr int kMaxBisections = 200;

void require_rate(double r) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("survival rate must lie in [0, 1]");
}

void require_coupling(const MeasurementConfig& cfg) {
    cfg.validate();
    if (cfg.coupling == 0.0) {
        throw ZeroCoupling("coupling g = 0 makes the ratio estimator undefined");
    }
}

// Walks outward from the mode accumulating log-weights until both tails are
// negligible. `lo_floor`/`hi_floor` force a minimal extent (the +/- k sigma
// window); the exact mode passes the full range.
struct LogWindow {
    std::int64_t first;
    std::vector<double> log_weights;
};

LogWindow build_log_window(std::int64_t n0, double r, std::int64_t lo_floor,
                           std::int64_t hi_floor, bool stop_on_tail) {
    const double log_odds = std::log(r) - std::log1p(-r);
    const auto mode = std::clamp<std::int64_t>(
        static_cast<std::int64_t>(std::floor((static_cast<double>(n0) + 1.0) * r)), 0, n0);
    const double tail_cut = std::log(kTailBound);

    std::vector<double> up{0.0};  // log w at mode, mode+1, ...
    for (std::int64_t n = mode; n < n0; ++n) {
        const double step = std::log(static_cast<double>(n0 - n) / static_cast<double>(n + 1)) +
                            log_odds;
        const double next = up.back() + step;
        up.push_back(next);
        if (stop_on_tail && n + 1 >= hi_floor && step < 0.0) {
            // remaining tail <= w * rho / (1 - rho) with rho = e^step < 1
            const double rho = std::exp(step);
            if (next + std::log(rho / (1.0 - rho)) < tail_cut) break;
        }
    }
    std::vector<double> down;  // log w at mode-1, mode-2, ...
    double current = 0.0;
    for (std::int64_t n = mode; n > 0; --n) {
        const double step = std::log(static_cast<double>(n) / static_cast<double>(n0 - n + 1)) -
                            log_odds;
        current += step;
        down.push_back(current);
        if (stop_on_tail && n - 1 <= lo_floor && step < 0.0) {
            const double rho = std::exp(step);
            if (current + std::log(rho / (1.0 - rho)) < tail_cut) break;
        }
    }
    LogWindow out;
    out.first = mode - static_cast<std::int64_t>(down.size());
    out.log_weights.reserve(down.size() + up.size());
    out.log_weights.assign(down.rbegin(), down.rend());
    out.log_weights.insert(out.log_weights.end(), up.begin(), up.end());
    return out;
}

} // namespace

void MeasurementConfig::validate() const {
    if (!(coupling >= 0.0) || !std::isfinite(coupling)) {
        throw std::invalid_argument("g must be finite and >= 0");
    }
    if (!(delta_q >= 0.0) || !std::isfinite(delta_q)) {
        throw std::invalid_argument("delta_q must be finite and >= 0");
    }
    if (!(delta_p >= 0.0) || !std::isfinite(delta_p)) {
        throw std::invalid_argument("delta_p must be finite and >= 0");
    }
    if (n0 < 1) throw std::invalid_argument("n0 must be >= 1");
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0, 1)");
}

double chebyshev_bound(double variance, std::int64_t n, double kappa) {
    if (!(variance >= 0.0)) throw std::invalid_argument("variance must be >= 0");
    if (n < 1) throw std::invalid_argument("sample count must be >= 1");
    if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
    return std::max(1.0 - variance / (static_cast<double>(n) * kappa * kappa), 0.0);
}

double pi_supremum(std::int64_t n0, double r) {
    require_rate(r);
    if (r == 1.0) return 1.0;
    return -std::expm1(static_cast<double>(n0) * std::log1p(-r));
}

BinomialWeights::BinomialWeights(std::int64_t n0, double r, BinomialSummation mode)
    : n0_(n0), rate_(r) {
    if (n0 < 1) throw std::invalid_argument("n0 must be >= 1");
    require_rate(r);
    supremum_ = pi_supremum(n0, r);
    if (r == 0.0 || r == 1.0) {
        first_ = r == 0.0 ? 0 : n0;
        weights_ = {1.0};
        return;
    }
    if (mode == BinomialSummation::automatic) {
        mode = n0 <= kExactBinomialLimit ? BinomialSummation::exact : BinomialSummation::truncated;
    }

    LogWindow window;
    if (mode == BinomialSummation::exact) {
        window = build_log_window(n0, r, 0, n0, false);
    } else {
        const double mean = static_cast<double>(n0) * r;
        const double sigma = std::sqrt(mean * (1.0 - r));
        const auto lo = static_cast<std::int64_t>(std::floor(mean - kWindowSigmas * sigma));
        const auto hi = static_cast<std::int64_t>(std::ceil(mean + kWindowSigmas * sigma));
        window = build_log_window(n0, r, std::max<std::int64_t>(lo, 0), std::min(hi, n0), true);
    }

    first_ = window.first;
    weights_.resize(window.log_weights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        weights_[i] = std::exp(window.log_weights[i]);
        total += weights_[i];
    }
    for (double& w : weights_) w /= total;
}

double pi_average(const BinomialWeights& weights, double kappa, double variance) {
    if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
    if (!(variance >= 0.0)) throw std::invalid_argument("variance must be >= 0");
    const double threshold = variance / (kappa * kappa);
    const auto w = weights.weights();
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const auto n = weights.first() + static_cast<std::int64_t>(i);
        if (n == 0) continue;
        const double term = 1.0 - threshold / static_cast<double>(n);
        if (term > 0.0) sum += w[i] * term;
    }
    return sum;
}

double pi_average(double kappa, std::int64_t n0, double r, double variance,
                  BinomialSummation mode) {
    return pi_average(BinomialWeights(n0, r, mode), kappa, variance);
}

double kappa_inverse(double eta, const BinomialWeights& weights, double variance) {
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0, 1)");
    if (!(variance >= 0.0) || !std::isfinite(variance)) {
        throw std::invalid_argument("variance must be finite and >= 0");
    }
    const double limit = weights.supremum() - kDomainEps;
    if (eta >= limit) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "eta = " << eta << " is not below 1 - Bi[0; N0, r] - 1e-9 = " << limit
            << " (N0 = " << weights.n0() << ", r = " << weights.rate() << ")";
        throw EtaOutOfDomain(msg.str());
    }
    if (variance == 0.0) return 0.0;

    // Pi vanishes identically on (0, sqrt(variance / N0)].
    double lo = std::sqrt(variance / static_cast<double>(weights.n0()));
    double hi = 2.0 * lo;
    while (pi_average(weights, hi, variance) < eta) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) throw std::logic_error("kappa_inverse: no upper bracket found");
    }
    for (int it = 0; it < kMaxBisections; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) return hi;
        if (pi_average(weights, mid, variance) < eta) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    throw std::logic_error("kappa_inverse: bisection did not converge in 200 iterations");
}

double kappa_inverse(double eta, std::int64_t n0, double r, double variance,
                     BinomialSummation mode) {
    return kappa_inverse(eta, BinomialWeights(n0, r, mode), variance);
}

UncertaintyBreakdown conventional_uncertainty(const MeasurementConfig& cfg,
                                              const SystemState& pre,
                                              const FiniteObservable& obs,
                                              const GaussianMeter& meter) {
    require_coupling(cfg);
    const double g = cfg.coupling;
    const auto stats = conventional_stats(pre, obs, g, meter);
    UncertaintyBreakdown out;
    out.kappa = std::sqrt(stats.variance_q / (static_cast<double>(cfg.n0) * (1.0 - cfg.eta)));
    out.systematic = cfg.delta_q / g;
    out.statistical = out.kappa / g;
    out.nonlinear = 0.0;
    out.total = out.systematic + out.statistical + out.nonlinear;
    out.survival_rate = 1.0;
    return out;
}

double nonlinear_term_q(const GaussianModelPoint& pt) {
    const auto& p = pt.params();
    return std::abs(p.relative_weak_value.real()) *
           std::abs(p.amplification * pt.one_minus_decay() / pt.denominator());
}

double nonlinear_term_p(const GaussianModelPoint& pt) {
    const auto& p = pt.params();
    return std::abs(p.relative_weak_value.imag()) *
           std::abs((1.0 + p.amplification) * pt.one_minus_decay() / pt.denominator());
}

namespace {

UncertaintyBreakdown weak_breakdown(const MeasurementConfig& cfg, double delta, double scale,
                                    double variance, double rate, double nonlinear) {
    const BinomialWeights weights(cfg.n0, rate);
    UncertaintyBreakdown out;
    out.survival_rate = rate;
    out.kappa = kappa_inverse(cfg.eta, weights, variance);
    out.systematic = delta / scale;
    out.statistical = out.kappa / scale;
    out.nonlinear = nonlinear;
    out.total = out.systematic + out.statistical + out.nonlinear;
    return out;
}

} // namespace

UncertaintyBreakdown weak_uncertainty_q(const MeasurementConfig& cfg,
                                        const GaussianModelPoint& pt, Complex total_overlap) {
    require_coupling(cfg);
    if (pt.coupling() != cfg.coupling) {
        throw std::invalid_argument("model point and configuration disagree on g");
    }
    return weak_breakdown(cfg, cfg.delta_q, pt.coupling(), variance_q(pt),
                          survival_rate(pt, total_overlap), nonlinear_term_q(pt));
}

UncertaintyBreakdown weak_uncertainty_p(const MeasurementConfig& cfg,
                                        const GaussianModelPoint& pt, Complex total_overlap) {
    require_coupling(cfg);
    if (pt.coupling() != cfg.coupling) {
        throw std::invalid_argument("model point and configuration disagree on g");
    }
    return weak_breakdown(cfg, cfg.delta_p, pt.momentum_scale(), variance_p(pt),
                          survival_rate(pt, total_overlap), nonlinear_term_p(pt));
}

namespace {

template <typename Compute>
ChannelVerdict judge(double target, Compute&& compute) {
    ChannelVerdict v;
    try {
        v.breakdown = compute();
        v.margin = std::abs(target) - v.breakdown->total;
        v.significant = v.margin >= 0.0;
    } catch (const EtaOutOfDomain& e) {
        v.reason = e.code();
        v.margin = -std::numeric_limits<double>::infinity();
    } catch (const NonPositiveVariance& e) {
        v.reason = e.code();
        v.margin = -std::numeric_limits<double>::infinity();
    }
    return v;
}

} // namespace

SignificanceVerdict significance(const MeasurementConfig& cfg, const SystemState& pre,
                                 const FiniteObservable& obs, const GaussianMeter& meter,
                                 const SystemState& post) {
    require_coupling(cfg);
    SignificanceVerdict out;
    out.expectation = expectation_and_variance(pre, obs).mean;
    out.conventional_q = judge(out.expectation, [&] {
        return conventional_uncertainty(cfg, pre, obs, meter);
    });

    const auto coeffs = overlap_coefficients(pre, post, obs);
    const auto params = two_point_parameters(coeffs, obs);
    out.weak_value = params.weak_value;
    const GaussianModelPoint pt(cfg.coupling, params, meter);
    out.weak_q = judge(params.weak_value.real(), [&] {
        return weak_uncertainty_q(cfg, pt, coeffs.total_overlap);
    });
    out.weak_p = judge(params.weak_value.imag(), [&] {
        return weak_uncertainty_p(cfg, pt, coeffs.total_overlap);
    });
    return out;
}

} // namespace wvamp
