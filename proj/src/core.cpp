#include "wvamp/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "wvamp/errors.hpp"

namespace wvamp {

namespace {

constexpr double kNormTolerance = 1e-12;
constexpr double kProjectorTolerance = 1e-12;
constexpr double kDistinctEigenvalues = 1e-9;
constexpr double kEigenstateVariance = 1e-14;

bool all_finite(const Eigen::MatrixXcd& m) {
    return m.real().allFinite() && m.imag().allFinite();
}

double max_abs(const Eigen::MatrixXcd& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

} // namespace

SystemState::SystemState(Eigen::VectorXcd amplitudes) : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() < 2) {
        throw std::invalid_argument("system state needs dimension >= 2");
    }
    if (!all_finite(amplitudes_)) {
        throw std::invalid_argument("system state has non-finite amplitudes");
    }
    const double n2 = amplitudes_.squaredNorm();
    if (std::abs(n2 - 1.0) > kNormTolerance) {
        std::ostringstream msg;
        msg << "system state is not normalized (squared norm " << n2 << ")";
        throw std::invalid_argument(msg.str());
    }
}

SystemState SystemState::normalized(Eigen::VectorXcd v) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw std::invalid_argument("cannot normalize a zero or non-finite vector");
    }
    v /= n;
    return SystemState(std::move(v));
}

SystemState SystemState::basis(Eigen::Index dimension, Eigen::Index index) {
    if (index < 0 || index >= dimension) {
        throw std::invalid_argument("basis index out of range");
    }
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dimension);
    v(index) = 1.0;
    return SystemState(std::move(v));
}

FiniteObservable::FiniteObservable(std::vector<double> eigenvalues,
                                   std::vector<Eigen::MatrixXcd> projectors)
    : eigenvalues_(std::move(eigenvalues)), projectors_(std::move(projectors)) {
    if (eigenvalues_.empty() || eigenvalues_.size() != projectors_.size()) {
        throw std::invalid_argument("observable needs one projector per eigenvalue");
    }
    double scale = 0.0;
    for (double l : eigenvalues_) {
        if (!std::isfinite(l)) throw std::invalid_argument("non-finite eigenvalue");
        scale = std::max(scale, std::abs(l));
    }
    for (std::size_t n = 1; n < eigenvalues_.size(); ++n) {
        if (!(eigenvalues_[n] - eigenvalues_[n - 1] > kDistinctEigenvalues * scale)) {
            throw std::invalid_argument(
                "eigenvalues must be strictly increasing and distinct by 1e-9 * max|lambda|");
        }
    }

    const Eigen::Index dim = projectors_.front().rows();
    if (dim < 2) throw std::invalid_argument("observable acts on dimension >= 2");
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t n = 0; n < projectors_.size(); ++n) {
        const auto& e = projectors_[n];
        if (e.rows() != dim || e.cols() != dim || !all_finite(e)) {
            throw std::invalid_argument("projectors must be finite square matrices of equal size");
        }
        if (max_abs(e - e.adjoint()) > kProjectorTolerance) {
            throw std::invalid_argument("projector " + std::to_string(n) + " is not Hermitian");
        }
        if (max_abs(e * e - e) > kProjectorTolerance) {
            throw std::invalid_argument("projector " + std::to_string(n) + " is not idempotent");
        }
        if (max_abs(e) <= kProjectorTolerance) {
            throw std::invalid_argument("projector " + std::to_string(n) + " is zero");
        }
        for (std::size_t m = 0; m < n; ++m) {
            if (max_abs(e * projectors_[m]) > kProjectorTolerance) {
                throw std::invalid_argument("projectors are not mutually orthogonal");
            }
        }
        sum += e;
    }
    if (max_abs(sum - Eigen::MatrixXcd::Identity(dim, dim)) > kProjectorTolerance) {
        throw std::invalid_argument("projectors do not resolve the identity");
    }
}

FiniteObservable FiniteObservable::diagonal(std::span<const double> entries) {
    const auto dim = static_cast<Eigen::Index>(entries.size());
    std::map<double, Eigen::MatrixXcd> blocks;
    for (Eigen::Index i = 0; i < dim; ++i) {
        auto [it, fresh] = blocks.try_emplace(entries[static_cast<std::size_t>(i)],
                                              Eigen::MatrixXcd::Zero(dim, dim));
        it->second(i, i) = 1.0;
    }
    std::vector<double> values;
    std::vector<Eigen::MatrixXcd> projectors;
    for (auto& [value, projector] : blocks) {
        values.push_back(value);
        projectors.push_back(std::move(projector));
    }
    return {std::move(values), std::move(projectors)};
}

FiniteObservable FiniteObservable::from_hermitian(const Eigen::Matrix2cd& m) {
    if (std::abs(m(0, 0).imag()) > kProjectorTolerance ||
        std::abs(m(1, 1).imag()) > kProjectorTolerance ||
        std::abs(m(0, 1) - std::conj(m(1, 0))) > kProjectorTolerance) {
        throw std::invalid_argument("matrix is not Hermitian");
    }
    const double a = m(0, 0).real();
    const double d = m(1, 1).real();
    const Complex b = m(0, 1);
    const double mean = 0.5 * (a + d);
    const double half_gap = std::hypot(0.5 * (a - d), std::abs(b));

    // E_± = (Id ± (M - mean Id) / half_gap) / 2
    Eigen::Matrix2cd traceless = m;
    traceless(0, 0) -= mean;
    traceless(1, 1) -= mean;
    if (!(half_gap > 0.0)) {
        throw std::invalid_argument("2x2 matrix is degenerate (multiple of identity)");
    }
    const Eigen::Matrix2cd unit = traceless / half_gap;
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    Eigen::MatrixXcd low = 0.5 * (id - unit);
    Eigen::MatrixXcd high = 0.5 * (id + unit);
    return {{mean - half_gap, mean + half_gap}, {low, high}};
}

Eigen::MatrixXcd FiniteObservable::matrix() const {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dimension(), dimension());
    for (std::size_t n = 0; n < eigenvalues_.size(); ++n) {
        a += eigenvalues_[n] * projectors_[n];
    }
    return a;
}

FiniteObservable FiniteObservable::translated(double t) const {
    auto values = eigenvalues_;
    for (double& l : values) l += t;
    return {std::move(values), projectors_};
}

FiniteObservable FiniteObservable::scaled(double factor) const {
    if (!(factor > 0.0)) throw std::invalid_argument("scale factor must be positive");
    auto values = eigenvalues_;
    for (double& l : values) l *= factor;
    return {std::move(values), projectors_};
}

FiniteObservable FiniteObservable::rotated(const Eigen::MatrixXcd& unitary) const {
    std::vector<Eigen::MatrixXcd> projectors;
    projectors.reserve(projectors_.size());
    for (const auto& e : projectors_) {
        Eigen::MatrixXcd r = unitary * e * unitary.adjoint();
        // restore exact Hermiticity lost to roundoff
        projectors.emplace_back(0.5 * (r + r.adjoint()));
    }
    return {eigenvalues_, std::move(projectors)};
}

Complex weak_value(const SystemState& pre, const SystemState& post, const FiniteObservable& obs) {
    if (pre.dimension() != obs.dimension() || post.dimension() != obs.dimension()) {
        throw std::invalid_argument("state and observable dimensions differ");
    }
    const Complex overlap = post.inner(pre);
    if (std::abs(overlap) <= kOrthoEps) {
        throw OrthogonalSelections("pre- and postselection are orthogonal; weak value undefined");
    }
    const Complex numerator = post.amplitudes().dot(obs.matrix() * pre.amplitudes());
    return numerator / overlap;
}

SystemState amplified_postselection(const SystemState& pre, const FiniteObservable& obs,
                                    Complex c) {
    if (c == Complex{}) throw std::invalid_argument("amplification parameter c must be nonzero");
    const auto [mean, variance] = expectation_and_variance(pre, obs);
    if (variance <= kEigenstateVariance) {
        throw EigenstatePreselection("preselection is an eigenstate of A; weak value is fixed");
    }
    const Eigen::VectorXcd& phi = pre.amplitudes();
    const Eigen::VectorXcd chi = (obs.matrix() * phi - mean * phi) / std::sqrt(variance);
    return SystemState::normalized(c * phi + chi);
}

OverlapCoefficients overlap_coefficients(const SystemState& pre, const SystemState& post,
                                         const FiniteObservable& obs) {
    if (pre.dimension() != obs.dimension() || post.dimension() != obs.dimension()) {
        throw std::invalid_argument("state and observable dimensions differ");
    }
    OverlapCoefficients out;
    out.c.reserve(obs.spectrum_size());
    for (const auto& e : obs.projectors()) {
        out.c.push_back(post.amplitudes().dot(e * pre.amplitudes()));
    }
    out.total_overlap = Complex{};
    for (const Complex& cn : out.c) out.total_overlap += cn;
    return out;
}

TwoPointParameters two_point_parameters(const OverlapCoefficients& coeffs, double lambda1,
                                        double lambda2) {
    if (coeffs.c.size() != 2) {
        throw std::invalid_argument("two-point parameters need exactly two coefficients");
    }
    if (!(lambda2 > lambda1)) throw std::invalid_argument("need lambda1 < lambda2");
    const Complex c1 = coeffs.c[0];
    const Complex c2 = coeffs.c[1];
    const Complex overlap = c1 + c2;
    if (std::abs(overlap) <= kOrthoEps) {
        throw OrthogonalSelections("pre- and postselection are orthogonal; weak value undefined");
    }

    TwoPointParameters p;
    p.lambda_m = 0.5 * (lambda1 + lambda2);
    p.lambda_r = 0.5 * (lambda2 - lambda1);
    // A_w - Lambda_m = Lambda_r (c2 - c1) / (c1 + c2), free of the cancellation in
    // |c1|^2 + |c2|^2 + 2 Re[c1* c2].
    p.relative_weak_value = p.lambda_r * (c2 - c1) / overlap;
    p.weak_value = p.relative_weak_value + p.lambda_m;
    p.amplification = 0.5 * (std::norm(p.relative_weak_value) / (p.lambda_r * p.lambda_r) - 1.0);

    const double from_coefficients = -2.0 * (std::conj(c1) * c2).real() / std::norm(overlap);
    if (std::abs(from_coefficients - p.amplification) >
        1e-9 * std::max(1.0, std::abs(p.amplification))) {
        throw std::logic_error("amplification parameter: coefficient and weak-value routes disagree");
    }
    return p;
}

TwoPointParameters two_point_parameters(const OverlapCoefficients& coeffs,
                                        const FiniteObservable& obs) {
    if (obs.spectrum_size() != 2) {
        throw std::invalid_argument("observable must have a two-point spectrum");
    }
    return two_point_parameters(coeffs, obs.eigenvalues()[0], obs.eigenvalues()[1]);
}

Moments expectation_and_variance(const SystemState& state, const FiniteObservable& obs) {
    if (state.dimension() != obs.dimension()) {
        throw std::invalid_argument("state and observable dimensions differ");
    }
    const auto& values = obs.eigenvalues();
    std::vector<double> weights;
    weights.reserve(values.size());
    for (const auto& e : obs.projectors()) {
        weights.push_back(state.amplitudes().dot(e * state.amplitudes()).real());
    }
    Moments m;
    for (std::size_t n = 0; n < values.size(); ++n) m.mean += weights[n] * values[n];
    for (std::size_t n = 0; n < values.size(); ++n) {
        const double dev = values[n] - m.mean;
        m.variance += weights[n] * dev * dev;
    }
    m.variance = std::max(m.variance, 0.0);
    return m;
}

} // namespace wvamp
