#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support/oracles.hpp"
#include "wvamp/errors.hpp"
#include "wvamp/uncertainty.hpp"

namespace wvamp {
namespace {

// kappa and epsilon reference values were computed with scipy's binomial pmf
// and Brent root finding (tests/oracles/quadrature_oracle.py).

Eigen::VectorXcd plus_state() {
    Eigen::VectorXcd v(2);
    v << 1.0, 1.0;
    return v / std::sqrt(2.0);
}

const std::vector<double> kSpinZ{0.5, -0.5};

MeasurementConfig window_config() {
    MeasurementConfig cfg;
    cfg.coupling = 1.0 / 50.0;
    cfg.delta_q = 0.5;
    cfg.n0 = 10'000'000;
    cfg.eta = 0.95;
    return cfg;
}

struct Point {
    GaussianModelPoint pt;
    Complex overlap;
};

Point amplified(Complex c, double g, double d) {
    const auto obs = FiniteObservable::diagonal(kSpinZ);
    const SystemState pre(plus_state());
    const auto post = amplified_postselection(pre, obs, c);
    const auto coeffs = overlap_coefficients(pre, post, obs);
    return {GaussianModelPoint(g, two_point_parameters(coeffs, obs), GaussianMeter(d)),
            coeffs.total_overlap};
}

double binomial_pmf(std::int64_t n, std::int64_t k, double r) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                    k * std::log(r) + (n - k) * std::log1p(-r));
}

TEST(Chebyshev, BoundAndValidation) {
    EXPECT_DOUBLE_EQ(chebyshev_bound(4.0, 4, 2.0), 0.75);
    EXPECT_DOUBLE_EQ(chebyshev_bound(4.0, 1, 1.0), 0.0);
    EXPECT_THROW(chebyshev_bound(1.0, 0, 1.0), std::invalid_argument);
    EXPECT_THROW(chebyshev_bound(1.0, 1, 0.0), std::invalid_argument);
}

TEST(BinomialWeights, ExactMatchesClosedForm) {
    const BinomialWeights w(40, 0.3, BinomialSummation::exact);
    ASSERT_EQ(w.first(), 0);
    ASSERT_EQ(w.weights().size(), 41u);
    double sum = 0.0;
    for (std::size_t k = 0; k < w.weights().size(); ++k) {
        EXPECT_NEAR(w.weights()[k], binomial_pmf(40, static_cast<std::int64_t>(k), 0.3), 1e-14);
        sum += w.weights()[k];
    }
    EXPECT_NEAR(sum, 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(w.supremum(), -std::expm1(40 * std::log1p(-0.3)));
}

TEST(BinomialWeights, DegenerateRates) {
    const BinomialWeights none(7, 0.0);
    EXPECT_EQ(none.first(), 0);
    EXPECT_EQ(none.supremum(), 0.0);
    const BinomialWeights all(7, 1.0);
    EXPECT_EQ(all.first(), 7);
    EXPECT_EQ(all.supremum(), 1.0);
    EXPECT_THROW(BinomialWeights(0, 0.5), std::invalid_argument);
    EXPECT_THROW(BinomialWeights(5, 1.5), std::invalid_argument);
}

TEST(BinomialWeights, TruncatedWindowKeepsTailsForSmallMean) {
    // mean 0.5: the +/- 9 sigma window alone would stop near N = 7
    const BinomialWeights w(10'000'000, 5e-8, BinomialSummation::truncated);
    EXPECT_EQ(w.first(), 0);
    EXPECT_GT(w.weights().size(), 10u);
    EXPECT_NEAR(w.weights()[0], std::exp(10'000'000 * std::log1p(-5e-8)), 1e-15);
}

TEST(PiAverage, HandComputedValue) {
    // (3/8)(3/4) + (3/8)(7/8) + (1/8)(11/12)
    EXPECT_NEAR(pi_average(2.0, 3, 0.5, 1.0), 0.7239583333333336, 1e-15);
    EXPECT_NEAR(pi_average(2.0, 3, 0.5, 1.0), 139.0 / 192.0, 1e-15);
}

TEST(PiAverage, MonotoneAndBoundedBySupremum) {
    const BinomialWeights w(500, 0.02);
    double last = 0.0;
    for (double kappa = 0.01; kappa < 100.0; kappa *= 1.3) {
        const double v = pi_average(w, kappa, 2.0);
        EXPECT_GE(v, last);
        EXPECT_LE(v, w.supremum());
        last = v;
    }
    EXPECT_NEAR(last, w.supremum(), 1e-4);
}

TEST(KappaInverse, RoundTrip) {
    testing::Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n0 = static_cast<std::int64_t>(testing::log_uniform(rng, 1.0, 2e5));
        const double r = testing::log_uniform(rng, 1e-3, 1.0);
        const double variance = testing::log_uniform(rng, 1e-4, 1e4);
        const double sup = pi_supremum(n0, r);
        if (sup - kDomainEps < 1e-3) continue;
        const double eta = testing::uniform(rng, 1e-3, sup - kDomainEps);
        const BinomialWeights w(n0, r);
        const double kappa = kappa_inverse(eta, w, variance);
        EXPECT_NEAR(pi_average(w, kappa, variance), eta, 1e-10 * std::max(eta, 1.0))
            << "n0=" << n0 << " r=" << r;
        // smallest such kappa: one ulp below falls short
        EXPECT_LT(pi_average(w, std::nextafter(kappa, 0.0), variance), eta);
    }
}

TEST(KappaInverse, DomainBoundaryIsExact) {
    const std::int64_t n0 = 50;
    const double r = 0.03;
    const BinomialWeights w(n0, r);
    const double limit = w.supremum() - kDomainEps;
    EXPECT_THROW(kappa_inverse(limit, w, 1.0), EtaOutOfDomain);
    EXPECT_THROW(kappa_inverse(std::nextafter(limit, 1.0), w, 1.0), EtaOutOfDomain);
    EXPECT_NO_THROW(kappa_inverse(std::nextafter(limit, 0.0), w, 1.0));
}

TEST(KappaInverse, ZeroVarianceAndValidation) {
    EXPECT_EQ(kappa_inverse(0.5, 10, 0.5, 0.0), 0.0);
    EXPECT_THROW(kappa_inverse(1.0, 10, 0.5, 1.0), std::invalid_argument);
    EXPECT_THROW(kappa_inverse(0.0, 10, 0.5, 1.0), std::invalid_argument);
    EXPECT_THROW(kappa_inverse(0.5, 10, 0.5, -1.0), std::invalid_argument);
}

TEST(KappaInverse, TruncatedMatchesExactAtTenThousand) {
    for (double r : {1e-4, 3e-3, 0.05, 0.5, 0.97}) {
        const BinomialWeights exact(10'000, r, BinomialSummation::exact);
        const BinomialWeights truncated(10'000, r, BinomialSummation::truncated);
        for (double kappa : {0.01, 0.1, 1.0, 10.0}) {
            EXPECT_NEAR(pi_average(truncated, kappa, 1.0), pi_average(exact, kappa, 1.0), 1e-12)
                << "r=" << r << " kappa=" << kappa;
        }
    }
}

TEST(ConventionalUncertainty, ArithmeticReference) {
    const auto obs = FiniteObservable::diagonal(kSpinZ);
    const auto u = conventional_uncertainty(window_config(), SystemState(plus_state()), obs,
                                            GaussianMeter(4.0));
    EXPECT_NEAR(u.total, 25.200001249996095, 1e-12);
    EXPECT_DOUBLE_EQ(u.systematic, 25.0);
    EXPECT_EQ(u.nonlinear, 0.0);
    EXPECT_EQ(u.survival_rate, 1.0);
    // sqrt((8 + 4e-4 / 4) / (1e7 * 0.05))
    EXPECT_NEAR(u.kappa, std::sqrt((8.0 + 1e-4) / 5e5), 1e-16);
}

TEST(ConventionalUncertainty, ZeroCoupling) {
    auto cfg = window_config();
    cfg.coupling = 0.0;
    const auto obs = FiniteObservable::diagonal(kSpinZ);
    EXPECT_THROW(conventional_uncertainty(cfg, SystemState(plus_state()), obs, GaussianMeter(4.0)),
                 ZeroCoupling);
}

TEST(WeakUncertainty, WindowPointMatchesOracle) {
    const auto [pt, ov] = amplified(1.0 / 200.0, 1.0 / 50.0, 4.0);
    const auto u = weak_uncertainty_q(window_config(), pt, ov);
    EXPECT_NEAR(u.kappa, 0.6872139349057151, 1e-12 * 0.69);
    EXPECT_NEAR(u.total, 70.47153007858694, 1e-12 * 70.5);
    EXPECT_NEAR(u.total / 100.0, 0.7047153007858694, 1e-12);
    EXPECT_DOUBLE_EQ(u.systematic, 25.0);
    EXPECT_NEAR(u.nonlinear, nonlinear_term_q(pt), 0.0);
    EXPECT_NEAR(u.total, u.systematic + u.statistical + u.nonlinear, 1e-13);
}

TEST(WeakUncertainty, ImaginaryChannelMatchesOracle) {
    const auto [pt, ov] = amplified(Complex{0, 1}, 1.0 / 50.0, 4.0);
    auto cfg = window_config();
    const auto u = weak_uncertainty_p(cfg, pt, ov);
    EXPECT_NEAR(u.kappa, 0.0003535511985829208, 1e-12 * 3.6e-4);
    EXPECT_NEAR(u.total, 0.282844083856571, 1e-12 * 0.29);
    EXPECT_NEAR(pt.params().weak_value.imag(), 0.5, 1e-15);
}

TEST(WeakUncertainty, NonlinearTermsMatchShiftDeviation) {
    testing::Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const auto obs = testing::random_two_point(rng, testing::uniform(rng, -2, 0),
                                                   testing::uniform(rng, 0.5, 3));
        const auto pre = testing::random_state(rng, 2);
        const auto post = testing::random_state(rng, 2);
        const auto coeffs = overlap_coefficients(pre, post, obs);
        const auto params = two_point_parameters(coeffs, obs);
        const GaussianModelPoint pt(testing::uniform(rng, 0.01, 3), params,
                                    GaussianMeter(testing::uniform(rng, 0.5, 4)));
        const double dq = std::abs(shift_q(pt) / pt.coupling() - params.weak_value.real());
        const double dp = std::abs(shift_p(pt) / pt.momentum_scale() - params.weak_value.imag());
        const double scale = std::max(1.0, std::abs(params.weak_value));
        EXPECT_NEAR(nonlinear_term_q(pt), dq, 1e-12 * scale);
        EXPECT_NEAR(nonlinear_term_p(pt), dp, 1e-12 * scale);
    }
}

TEST(WeakUncertainty, EtaOutOfDomainForTinyEnsembles) {
    auto cfg = window_config();
    cfg.n0 = 10;
    const auto [pt, ov] = amplified(1.0 / 200.0, 1.0 / 50.0, 4.0);
    EXPECT_THROW(weak_uncertainty_q(cfg, pt, ov), EtaOutOfDomain);
}

TEST(Significance, WindowPointIsWeaklyButNotConventionallySignificant) {
    const auto obs = FiniteObservable::diagonal(kSpinZ);
    const SystemState pre(plus_state());
    const auto post = amplified_postselection(pre, obs, 1.0 / 200.0);
    const auto v = significance(window_config(), pre, obs, GaussianMeter(4.0), post);
    EXPECT_NEAR(v.weak_value.real(), 100.0, 1e-9);
    EXPECT_TRUE(v.weak_q.significant);
    EXPECT_NEAR(v.weak_q.margin, 100.0 - 70.47153007858694, 1e-9);
    EXPECT_FALSE(v.conventional_q.significant);
    EXPECT_EQ(v.expectation, 0.0);
    // Im A_w = 0: nothing to detect in P, the condition cannot hold
    EXPECT_FALSE(v.weak_p.significant);
    EXPECT_TRUE(v.weak_p.reason.empty());
}

TEST(Significance, UndefinedChannelsCarryReason) {
    auto cfg = window_config();
    cfg.n0 = 10;
    const auto obs = FiniteObservable::diagonal(kSpinZ);
    const SystemState pre(plus_state());
    const auto post = amplified_postselection(pre, obs, 1.0 / 200.0);
    const auto v = significance(cfg, pre, obs, GaussianMeter(4.0), post);
    EXPECT_FALSE(v.weak_q.significant);
    EXPECT_EQ(v.weak_q.reason, "eta_out_of_domain");
    EXPECT_EQ(v.weak_q.margin, -std::numeric_limits<double>::infinity());
    EXPECT_FALSE(v.weak_q.breakdown.has_value());
    EXPECT_TRUE(v.conventional_q.breakdown.has_value());
}

TEST(NonlinearSaturation, ApproachesRelativeWeakValue) {
    const std::vector<double> pauli{1.0, -1.0};
    const auto obs = FiniteObservable::diagonal(pauli);
    const SystemState pre(plus_state());
    double last = 0.0;
    for (double ar : {1e2, 1e4, 1e6}) {
        const auto post = amplified_postselection(pre, obs, 1.0 / ar);
        const auto params = two_point_parameters(overlap_coefficients(pre, post, obs), obs);
        const GaussianModelPoint pt(1.0, params, GaussianMeter(1.0));
        const double ratio = nonlinear_term_q(pt) / std::abs(params.relative_weak_value.real());
        EXPECT_GT(ratio, last);
        EXPECT_LT(ratio, 1.0);
        last = ratio;
    }
    EXPECT_GT(last, 0.99);
}

TEST(MeasurementConfig, Validation) {
    MeasurementConfig cfg = window_config();
    EXPECT_NO_THROW(cfg.validate());
    cfg.eta = 1.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = window_config();
    cfg.n0 = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = window_config();
    cfg.delta_q = -1;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

} // namespace
} // namespace wvamp
