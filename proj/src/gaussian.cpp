#include "wvamp/gaussian.hpp"

#include <cmath>
#include <stdexcept>

#include "wvamp/errors.hpp"

namespace wvamp {

GaussianMeter::GaussianMeter(double width) : width_(width) {
    if (!(width > 0.0) || !std::isfinite(width)) {
        throw std::invalid_argument("meter width d must be positive and finite");
    }
}

GaussianModelPoint::GaussianModelPoint(double coupling, TwoPointParameters params,
                                       GaussianMeter meter)
    : coupling_(coupling), params_(params), meter_(meter) {
    if (!(coupling >= 0.0) || !std::isfinite(coupling)) {
        throw std::invalid_argument("coupling g must be finite and >= 0");
    }
    if (!(params_.lambda_r > 0.0)) throw std::invalid_argument("Lambda_r must be positive");
    const double x = coupling_ * params_.lambda_r / meter_.width();
    // exp underflows to 0 for x^2 > ~745; the s -> 0 limits of all formulas hold.
    decay_ = std::exp(-x * x);
    one_minus_decay_ = -std::expm1(-x * x);
    denominator_ = 1.0 + params_.amplification * one_minus_decay_;
    if (!(denominator_ > 0.25)) {
        throw std::logic_error("denominator 1 + a(1 - s) fell below 1/2; inconsistent parameters");
    }
}

double survival_rate(const GaussianModelPoint& pt, Complex total_overlap) {
    return std::norm(total_overlap) * pt.denominator();
}

double shift_q(const GaussianModelPoint& pt) {
    const auto& p = pt.params();
    return pt.coupling() * p.relative_weak_value.real() / pt.denominator() +
           pt.coupling() * p.lambda_m;
}

double shift_p(const GaussianModelPoint& pt) {
    const auto& p = pt.params();
    return pt.momentum_scale() * p.relative_weak_value.imag() * pt.decay() / pt.denominator();
}

double variance_q(const GaussianModelPoint& pt) {
    const auto& p = pt.params();
    const double g = pt.coupling();
    const double lr2 = p.lambda_r * p.lambda_r;
    const double re = p.relative_weak_value.real() / pt.denominator();
    const double v = pt.meter().variance_q() +
                     g * g * lr2 * (1.0 + p.amplification) / pt.denominator() - g * g * re * re;
    if (!(v > 0.0)) {
        throw NonPositiveVariance("Var_Q(psi_f) evaluated to a non-positive number");
    }
    return v;
}

double variance_p(const GaussianModelPoint& pt) {
    const auto& p = pt.params();
    const double k = pt.momentum_scale();
    const double lr2 = p.lambda_r * p.lambda_r;
    const double im = p.relative_weak_value.imag() * pt.decay() / pt.denominator();
    const double v = pt.meter().variance_p() +
                     k * k * (p.amplification * lr2 * pt.decay() / pt.denominator() - im * im);
    if (!(v > 0.0)) {
        throw NonPositiveVariance("Var_P(psi_f) evaluated to a non-positive number");
    }
    return v;
}

ConventionalStats conventional_stats(const SystemState& pre, const FiniteObservable& obs,
                                     double coupling, const GaussianMeter& meter) {
    const auto [mean, variance] = expectation_and_variance(pre, obs);
    ConventionalStats out;
    out.shift_q = coupling * mean;
    out.variance_q = meter.variance_q() + coupling * coupling * variance;
    out.shift_p = 0.0;
    out.variance_p = meter.variance_p();
    return out;
}

} // namespace wvamp
