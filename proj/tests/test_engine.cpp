#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "support/oracles.hpp"
#include "wvamp/engine.hpp"
#include "wvamp/errors.hpp"
#include "wvamp/gaussian.hpp"

namespace wvamp::engine {
namespace {

using testing::Rng;

Eigen::VectorXcd plus_state() {
    Eigen::VectorXcd v(2);
    v << 1.0, 1.0;
    return v / std::sqrt(2.0);
}

double l2_distance(const MeterWaveFunction& a, const MeterWaveFunction& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.samples().size(); ++j) {
        s += std::norm(a.samples()[j] - b.samples()[j]);
    }
    return std::sqrt(s * a.grid().dx());
}

MeterStatistics transition_stats(const OverlapCoefficients& coeffs, const FiniteObservable& obs,
                                 double g, double d) {
    double max_shift = 0.0;
    for (double l : obs.eigenvalues()) max_shift = std::max(max_shift, std::abs(g * l));
    const auto grid = GridSpec::default_for(d, max_shift);
    return meter_statistics(apply_transition(coeffs.c, obs.eigenvalues(), g, build_gaussian(grid, d)));
}

TEST(GridSpec, ValidationAndDefaults) {
    EXPECT_THROW((GridSpec{1.0, -1.0, 256}.validate()), std::invalid_argument);
    EXPECT_THROW((GridSpec{-1.0, 1.0, 300}.validate()), std::invalid_argument);
    EXPECT_THROW((GridSpec{-1.0, 1.0, 128}.validate()), std::invalid_argument);
    const auto g = GridSpec::default_for(2.0, 3.0);
    EXPECT_DOUBLE_EQ(g.x_max, 35.0);
    EXPECT_DOUBLE_EQ(g.x_min, -35.0);
    EXPECT_LE(g.dx(), 2.0 / 32.0);
    EXPECT_GT(70.0 / static_cast<double>(g.n_points / 2), 2.0 / 32.0);
}

TEST(BuildGaussian, UnitWidthNormAndMoments) {
    const auto psi = build_gaussian({-16.0, 16.0, 2048}, 1.0);
    EXPECT_NEAR(psi.norm2(), 1.0, 1e-10);
    const auto s = meter_statistics(psi);
    EXPECT_NEAR(s.e_q, 0.0, 1e-14);
    EXPECT_NEAR(s.e_p, 0.0, 1e-14);
    EXPECT_NEAR(s.var_q, 0.5, 1e-8);
    EXPECT_NEAR(s.var_p, 0.5, 1e-8);
}

TEST(BuildGaussian, WidthTwoStatistics) {
    const auto psi = build_gaussian(GridSpec::default_for(2.0, 0.0), 2.0);
    const auto s = meter_statistics(psi);
    EXPECT_NEAR(s.norm2, 1.0, 1e-10);
    EXPECT_NEAR(s.e_q, 0.0, 1e-12);
    EXPECT_NEAR(s.e_p, 0.0, 1e-12);
    EXPECT_NEAR(s.var_q, 2.0, 1e-8);
    EXPECT_NEAR(s.var_p, 0.125, 1e-8);
}

TEST(BuildGaussian, NarrowGridThrows) {
    EXPECT_THROW(build_gaussian({-3.0, 3.0, 256}, 1.0), GridTooNarrow);
}

TEST(ApplyTransition, HalfCellShiftIsSpectrallyExact) {
    const GridSpec grid{-20.0, 20.0, 1024};
    const auto psi = build_gaussian(grid, 1.3);
    const double shift = 0.5 * grid.dx() + 1.0;
    const std::array<Complex, 1> one{Complex{1.0}};
    const std::array<double, 1> lambda{shift};
    const auto moved = apply_transition(one, lambda, 1.0, psi);
    std::vector<Complex> exact(grid.n_points);
    const double prefactor = std::pow(std::numbers::pi * 1.69, -0.25);
    for (std::size_t j = 0; j < exact.size(); ++j) {
        const double u = (grid.x(j) - shift) / 1.3;
        exact[j] = prefactor * std::exp(-0.5 * u * u);
    }
    EXPECT_LT(l2_distance(moved, MeterWaveFunction(grid, exact)), 1e-10);
    const auto s = meter_statistics(moved);
    EXPECT_NEAR(s.e_q, shift, 1e-10);
    EXPECT_NEAR(s.var_q, 0.5 * 1.69, 1e-8);
}

TEST(ApplyTransition, ZeroCouplingScalesByTotalOverlap) {
    const auto psi = build_gaussian(GridSpec::default_for(1.0, 0.0), 1.0);
    const std::array<Complex, 2> c{Complex{0.2, 0.1}, Complex{-0.5, 0.3}};
    const std::array<double, 2> lambda{-1.0, 2.0};
    const auto out = apply_transition(c, lambda, 0.0, psi);
    const Complex total = c[0] + c[1];
    for (std::size_t j = 0; j < out.samples().size(); ++j) {
        EXPECT_NEAR(std::abs(out.samples()[j] - total * psi.samples()[j]), 0.0, 1e-15);
    }
}

TEST(ApplyTransition, LinearInCoefficients) {
    const auto psi = build_gaussian(GridSpec::default_for(0.8, 2.0), 0.8);
    const std::array<double, 2> lambda{-1.0, 1.5};
    const std::array<Complex, 2> a{Complex{0.3, -0.2}, Complex{0.1, 0.4}};
    const std::array<Complex, 2> b{Complex{-0.6, 0.1}, Complex{0.2, 0.0}};
    const Complex alpha{0.7, -1.1};
    const std::array<Complex, 2> mix{a[0] + alpha * b[0], a[1] + alpha * b[1]};
    const auto fa = apply_transition(a, lambda, 1.2, psi);
    const auto fb = apply_transition(b, lambda, 1.2, psi);
    const auto fm = apply_transition(mix, lambda, 1.2, psi);
    for (std::size_t j = 0; j < fm.samples().size(); ++j) {
        EXPECT_NEAR(std::abs(fm.samples()[j] - fa.samples()[j] - alpha * fb.samples()[j]), 0.0,
                    1e-14);
    }
}

TEST(ApplyTransition, ShiftOutOfGridThrows) {
    const auto psi = build_gaussian(GridSpec::default_for(1.0, 0.0), 1.0);
    const std::array<Complex, 1> one{Complex{1.0}};
    const std::array<double, 1> far{20.0};
    EXPECT_THROW(apply_transition(one, far, 1.0, psi), ShiftOutOfGrid);
    const std::array<double, 1> near{2.0};
    EXPECT_NO_THROW(apply_transition(one, near, 1.0, psi));
}

TEST(MeterStatistics, VanishingStateThrows) {
    const auto psi = build_gaussian(GridSpec::default_for(1.0, 1.0), 1.0);
    const std::array<Complex, 2> c{Complex{1e-9}, Complex{0.0}};
    const std::array<double, 2> lambda{-1.0, 1.0};
    EXPECT_THROW(meter_statistics(apply_transition(c, lambda, 0.5, psi)), VanishingState);
}

TEST(MeterStatistics, TranslatedGaussian) {
    const auto psi = build_gaussian(GridSpec::default_for(1.5, 4.0), 1.5);
    const std::array<Complex, 1> one{Complex{1.0}};
    const std::array<double, 1> lambda{-3.7};
    const auto s = meter_statistics(apply_transition(one, lambda, 1.0, psi));
    EXPECT_NEAR(s.e_q, -3.7, 1e-10);
    EXPECT_NEAR(s.var_q, 0.5 * 2.25, 1e-8);
}

// The same quadrature references as the closed-form tests, here reached
// through the grid.
TEST(MeterStatistics, MatchesQuadratureReferences) {
    const std::vector<double> pauli{1.0, -1.0};
    const std::vector<double> spin{0.5, -0.5};
    const SystemState pre(plus_state());
    {
        const auto obs = FiniteObservable::diagonal(pauli);
        const auto s = transition_stats(overlap_coefficients(pre, pre, obs), obs, 1.0, 1.0);
        EXPECT_LE(testing::rel_dev(s.norm2, 0.68393972058572116), 1e-10);
        EXPECT_NEAR(s.e_q, 0.0, 1e-12);
        EXPECT_NEAR(s.e_p, 0.0, 1e-12);
        EXPECT_LE(testing::rel_dev(s.var_q, 1.2310585786300049), 1e-9);
        EXPECT_LE(testing::rel_dev(s.var_p, 0.23105857863000488), 1e-9);
    }
    {
        const auto obs = FiniteObservable::diagonal(spin);
        const auto post = amplified_postselection(pre, obs, 1.0 / 200.0);
        const auto s = transition_stats(overlap_coefficients(pre, post, obs), obs, 0.02, 4.0);
        EXPECT_LE(testing::rel_dev(s.norm2, 2.8124209004414375e-5), 1e-8);
        EXPECT_LE(testing::rel_dev(s.e_q, 1.7777833333339763), 1e-8);
        EXPECT_NEAR(s.e_p, 0.0, 1e-10);
        EXPECT_LE(testing::rel_dev(s.var_q, 6.6173141976372457), 1e-8);
        EXPECT_LE(testing::rel_dev(s.var_p, 0.038194249132489491), 1e-8);
    }
    {
        const auto obs = FiniteObservable::diagonal(pauli);
        const auto post = amplified_postselection(pre, obs, Complex{0, 1});
        const auto s = transition_stats(overlap_coefficients(pre, post, obs), obs, 1.0, 1.0);
        EXPECT_LE(testing::rel_dev(s.norm2, 0.5), 1e-10);
        EXPECT_NEAR(s.e_q, 0.0, 1e-12);
        EXPECT_LE(testing::rel_dev(s.e_p, 0.36787944117144232), 1e-8);
        EXPECT_LE(testing::rel_dev(s.var_q, 1.5), 1e-8);
        EXPECT_LE(testing::rel_dev(s.var_p, 0.36466471676338731), 1e-8);
    }
}

TEST(MeterStatistics, AgreesWithClosedFormsOnRandomSelections) {
    Rng rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        const double lo = testing::uniform(rng, -2, 1);
        const auto obs = testing::random_two_point(rng, lo, lo + testing::uniform(rng, 0.2, 2));
        const auto pre = testing::random_state(rng, 2);
        const auto post = testing::random_state(rng, 2);
        const double g = testing::uniform(rng, 0.0, 5.0);
        const double d = testing::uniform(rng, 0.5, 8.0);
        const auto coeffs = overlap_coefficients(pre, post, obs);
        const GaussianModelPoint pt(g, two_point_parameters(coeffs, obs), GaussianMeter(d));
        const auto s = transition_stats(coeffs, obs, g, d);
        EXPECT_TRUE(testing::agrees(s.norm2, survival_rate(pt, coeffs.total_overlap), 1e-8, 1e-10));
        EXPECT_TRUE(testing::agrees(s.e_q, shift_q(pt), 1e-8, 1e-10)) << s.e_q << " " << shift_q(pt);
        EXPECT_TRUE(testing::agrees(s.e_p, shift_p(pt), 1e-8, 1e-10)) << s.e_p << " " << shift_p(pt);
        EXPECT_TRUE(testing::agrees(s.var_q, variance_q(pt), 1e-8, 1e-10));
        EXPECT_TRUE(testing::agrees(s.var_p, variance_p(pt), 1e-8, 1e-10));
    }
}

TEST(BasisAverage, EigenbasisGivesConventionalShift) {
    const std::vector<double> pauli{1.0, -1.0};
    const auto obs = FiniteObservable::diagonal(pauli);
    Rng rng(4);
    const auto pre = testing::random_state(rng, 2);
    const std::vector<SystemState> basis{SystemState::basis(2, 0), SystemState::basis(2, 1)};
    const double g = 0.8;
    const auto psi = build_gaussian(GridSpec::default_for(1.0, g), 1.0);
    const auto avg = basis_average_check(pre, obs, basis, g, psi);
    EXPECT_NEAR(avg.shift_q, g * expectation_and_variance(pre, obs).mean, 1e-9);
    EXPECT_NEAR(avg.shift_p, 0.0, 1e-9);
}

TEST(BasisAverage, RandomBasesInTwoAndThreeDimensions) {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index dim = trial % 2 == 0 ? 2 : 3;
        std::vector<double> spectrum;
        for (Eigen::Index i = 0; i < dim; ++i) spectrum.push_back(testing::uniform(rng, -2, 2));
        const auto obs =
            FiniteObservable::diagonal(spectrum).rotated(testing::random_unitary(rng, dim));
        const auto pre = testing::random_state(rng, dim);
        const auto basis = testing::random_basis(rng, dim);
        const double g = testing::uniform(rng, 0.05, 3.0);
        const double d = testing::uniform(rng, 0.5, 3.0);
        const auto psi = build_gaussian(GridSpec::default_for(d, 2.0 * g), d);
        const auto avg = basis_average_check(pre, obs, basis, g, psi);
        EXPECT_NEAR(avg.shift_q, g * expectation_and_variance(pre, obs).mean, 1e-9);
        EXPECT_NEAR(avg.shift_p, 0.0, 1e-9);
    }
}

TEST(BasisAverage, RejectsNonOrthonormalBasis) {
    const std::vector<double> pauli{1.0, -1.0};
    const auto obs = FiniteObservable::diagonal(pauli);
    const auto psi = build_gaussian(GridSpec::default_for(1.0, 1.0), 1.0);
    const SystemState pre(plus_state());
    const std::vector<SystemState> skew{SystemState::basis(2, 0), SystemState(plus_state())};
    EXPECT_THROW(basis_average_check(pre, obs, skew, 0.5, psi), NonOrthonormalBasis);
    const std::vector<SystemState> partial{SystemState::basis(2, 0)};
    EXPECT_THROW(basis_average_check(pre, obs, partial, 0.5, psi), NonOrthonormalBasis);
}

TEST(ConventionalMeter, MixtureMomentsMatchUnselectedFormulas) {
    Rng rng(31);
    const std::vector<double> spectrum{-1.2, 0.3, 2.0};
    const auto obs = FiniteObservable::diagonal(spectrum).rotated(testing::random_unitary(rng, 3));
    const auto pre = testing::random_state(rng, 3);
    const double g = 0.9;
    const double d = 1.4;
    const auto psi = build_gaussian(GridSpec::default_for(d, 2.0 * g), d);
    const auto s = conventional_meter_statistics(pre, obs, g, psi);
    const auto [mean, variance] = expectation_and_variance(pre, obs);
    EXPECT_NEAR(s.norm2, 1.0, 1e-10);
    EXPECT_NEAR(s.e_q, g * mean, 1e-10);
    EXPECT_NEAR(s.var_q, 0.5 * d * d + g * g * variance, 1e-8);
    EXPECT_NEAR(s.e_p, 0.0, 1e-10);
    EXPECT_NEAR(s.var_p, 0.5 / (d * d), 1e-8);
}

TEST(ThreePointSpectrum, ShiftsStayBoundedOverSelections) {
    Rng rng(99);
    const std::vector<double> spectrum{-1.0, 0.2, 1.0};
    const auto obs = FiniteObservable::diagonal(spectrum);
    const double g = 0.5;
    const double d = 1.0;
    const auto psi = build_gaussian(GridSpec::default_for(d, g), d);
    double max_q = 0.0;
    double max_p = 0.0;
    for (int trial = 0; trial < 300; ++trial) {
        const auto pre = testing::random_state(rng, 3);
        const auto post = testing::random_state(rng, 3);
        const auto coeffs = overlap_coefficients(pre, post, obs);
        const auto out = apply_transition(coeffs.c, obs.eigenvalues(), g, psi);
        if (out.norm2() < 1e-8) continue;
        const auto s = meter_statistics(out);
        max_q = std::max(max_q, std::abs(s.e_q));
        max_p = std::max(max_p, std::abs(s.e_p));
    }
    // finite-spectrum shifts stay within a few meter widths however the
    // selections vary; the weak value itself is unbounded
    EXPECT_LT(max_q, g + 5.0 * d);
    EXPECT_LT(max_p, 5.0 / d);
}

TEST(MomentumDensity, OrderedNodesAndParseval) {
    const auto psi = build_gaussian(GridSpec::default_for(1.0, 0.0), 1.0);
    const auto density = momentum_density(psi);
    double total = 0.0;
    for (std::size_t i = 1; i < density.nodes.size(); ++i) {
        EXPECT_NEAR(density.nodes[i] - density.nodes[i - 1], density.spacing, 1e-12);
    }
    for (double w : density.weights) total += w;
    EXPECT_NEAR(total, psi.norm2(), 1e-12);
}

} // namespace
} // namespace wvamp::engine
