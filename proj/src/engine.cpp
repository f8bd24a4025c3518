#include "wvamp/engine.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "wvamp/errors.hpp"

namespace wvamp::engine {

namespace {

constexpr double kVanishingNorm = 1e-14;
constexpr double kVarianceClamp = -1e-10;
constexpr double kBasisTolerance = 1e-10;

// FFTW planning is not thread-safe; execution with the new-array interface is.
// Plans are created once per (size, direction) with FFTW_UNALIGNED so that any
// std::vector buffer may be passed to fftw_execute_dft.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::vector<Complex> in(n), out(n);
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n),
                                          reinterpret_cast<fftw_complex*>(in.data()),
                                          reinterpret_cast<fftw_complex*>(out.data()), sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (plan == nullptr) throw std::runtime_error("FFTW failed to create a plan");
        plans_.emplace(key, plan);
        return plan;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

std::vector<Complex> transform(std::span<const Complex> in, int sign) {
    std::vector<Complex> src(in.begin(), in.end());
    std::vector<Complex> out(in.size());
    fftw_execute_dft(PlanCache::instance().get(in.size(), sign),
                     reinterpret_cast<fftw_complex*>(src.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

bool is_power_of_two(std::size_t n) { return std::has_single_bit(n); }

// Indices of the first and last samples with |psi| > kEdgeDecay.
std::pair<std::size_t, std::size_t> support(std::span<const Complex> samples) {
    std::size_t lo = samples.size();
    std::size_t hi = 0;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        if (std::abs(samples[j]) > kEdgeDecay) {
            lo = std::min(lo, j);
            hi = j;
        }
    }
    return {lo, hi};
}

double clamp_variance(double v, const char* what) {
    if (v < kVarianceClamp) {
        throw std::logic_error(std::string(what) + " variance is negative beyond roundoff");
    }
    return std::max(v, 0.0);
}

} // namespace

void GridSpec::validate() const {
    if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
        throw std::invalid_argument("grid needs finite x_min < x_max");
    }
    if (n_points < 256 || !is_power_of_two(n_points)) {
        throw std::invalid_argument("grid size must be a power of two >= 256");
    }
}

GridSpec GridSpec::default_for(double width, double max_shift) {
    if (!(width > 0.0) || !std::isfinite(width)) {
        throw std::invalid_argument("meter width must be positive and finite");
    }
    if (!(max_shift >= 0.0) || !std::isfinite(max_shift)) {
        throw std::invalid_argument("max shift must be finite and >= 0");
    }
    const double half = 8.0 * width + max_shift + 8.0 * width;
    std::size_t n = 256;
    while (2.0 * half / static_cast<double>(n) > width / 32.0) n *= 2;
    return {-half, half, n};
}

std::vector<double> momentum_grid(const GridSpec& grid) {
    const std::size_t n = grid.n_points;
    const double unit = 2.0 * std::numbers::pi / (static_cast<double>(n) * grid.dx());
    std::vector<double> p(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto signed_k = k < n / 2 ? static_cast<double>(k)
                                        : static_cast<double>(k) - static_cast<double>(n);
        p[k] = unit * signed_k;
    }
    return p;
}

MeterWaveFunction::MeterWaveFunction(GridSpec grid, std::vector<Complex> samples)
    : grid_(grid), samples_(std::move(samples)), norm2_(0.0) {
    grid_.validate();
    if (samples_.size() != grid_.n_points) {
        throw std::invalid_argument("sample count does not match the grid");
    }
    for (const Complex& s : samples_) {
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
            throw std::invalid_argument("wavefunction has non-finite samples");
        }
        norm2_ += std::norm(s);
    }
    norm2_ *= grid_.dx();
    const double left = std::abs(samples_.front());
    const double right = std::abs(samples_.back());
    if (!(left < kEdgeDecay && right < kEdgeDecay)) {
        std::ostringstream msg;
        msg << "wavefunction does not decay at the grid edges (|psi| = " << left << ", "
            << right << ")";
        throw GridTooNarrow(msg.str());
    }
}

MeterWaveFunction build_gaussian(const GridSpec& grid, double width) {
    grid.validate();
    if (!(width > 0.0) || !std::isfinite(width)) {
        throw std::invalid_argument("meter width must be positive and finite");
    }
    const double prefactor = std::pow(std::numbers::pi * width * width, -0.25);
    std::vector<Complex> samples(grid.n_points);
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const double u = grid.x(j) / width;
        samples[j] = prefactor * std::exp(-0.5 * u * u);
    }
    return {grid, std::move(samples)};
}

MeterWaveFunction apply_transition(std::span<const Complex> coeffs,
                                   std::span<const double> eigenvalues, double coupling,
                                   const MeterWaveFunction& psi) {
    if (coeffs.size() != eigenvalues.size() || coeffs.empty()) {
        throw std::invalid_argument("need one coefficient per eigenvalue");
    }
    if (!std::isfinite(coupling)) throw std::invalid_argument("coupling must be finite");
    const GridSpec& grid = psi.grid();
    const double dx = grid.dx();
    const auto [lo, hi] = support(psi.samples());
    if (lo <= hi) {
        // keep one clear cell beyond the shifted support on either side
        const double left = grid.x(lo);
        const double right = grid.x(hi);
        for (double lambda : eigenvalues) {
            const double shift = coupling * lambda;
            if (!(left + shift > grid.x_min + dx && right + shift < grid.x_max - 2.0 * dx)) {
                std::ostringstream msg;
                msg << "translation by g*lambda = " << shift
                    << " moves the support outside the grid";
                throw ShiftOutOfGrid(msg.str());
            }
        }
    }

    const std::size_t n = grid.n_points;
    const auto spectrum = transform(psi.samples(), FFTW_FORWARD);
    const auto p = momentum_grid(grid);
    std::vector<Complex> combined(n, Complex{});
    for (std::size_t m = 0; m < coeffs.size(); ++m) {
        const double shift = coupling * eigenvalues[m];
        for (std::size_t k = 0; k < n; ++k) {
            combined[k] += coeffs[m] * std::polar(1.0, -p[k] * shift) * spectrum[k];
        }
    }
    auto samples = transform(combined, FFTW_BACKWARD);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Complex& s : samples) s *= inv_n;
    return {grid, std::move(samples)};
}

RawMoments raw_moments(const MeterWaveFunction& psi) {
    const GridSpec& grid = psi.grid();
    const auto samples = psi.samples();
    const double dx = grid.dx();
    RawMoments m;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const double w = std::norm(samples[j]);
        const double x = grid.x(j);
        m.norm2 += w;
        m.q1 += w * x;
        m.q2 += w * x * x;
    }
    m.norm2 *= dx;
    m.q1 *= dx;
    m.q2 *= dx;

    // Parseval: sum |psi_k|^2 = n sum |psi_j|^2
    const auto spectrum = transform(samples, FFTW_FORWARD);
    const auto p = momentum_grid(grid);
    const double scale = dx / static_cast<double>(samples.size());
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        const double w = std::norm(spectrum[k]) * scale;
        m.p1 += w * p[k];
        m.p2 += w * p[k] * p[k];
    }
    return m;
}

MeterStatistics meter_statistics(const MeterWaveFunction& psi) {
    const RawMoments raw = raw_moments(psi);
    if (!(raw.norm2 > kVanishingNorm)) {
        std::ostringstream msg;
        msg << "postselected meter state has norm^2 = " << raw.norm2 << " <= 1e-14";
        throw VanishingState(msg.str());
    }
    MeterStatistics s;
    s.norm2 = raw.norm2;
    s.e_q = raw.q1 / raw.norm2;
    s.e_p = raw.p1 / raw.norm2;

    // central second moments in a second pass, avoiding <x^2> - <x>^2
    const GridSpec& grid = psi.grid();
    const auto samples = psi.samples();
    double vq = 0.0;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const double dev = grid.x(j) - s.e_q;
        vq += std::norm(samples[j]) * dev * dev;
    }
    s.var_q = clamp_variance(vq * grid.dx() / raw.norm2, "position");

    const auto spectrum = transform(samples, FFTW_FORWARD);
    const auto p = momentum_grid(grid);
    double vp = 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        const double w = std::norm(spectrum[k]);
        const double dev = p[k] - s.e_p;
        vp += w * dev * dev;
        total += w;
    }
    s.var_p = clamp_variance(vp / total, "momentum");
    return s;
}

std::vector<double> position_weights(const MeterWaveFunction& psi) {
    const double dx = psi.grid().dx();
    std::vector<double> w;
    w.reserve(psi.samples().size());
    for (const Complex& s : psi.samples()) w.push_back(std::norm(s) * dx);
    return w;
}

MomentumDensity momentum_density(const MeterWaveFunction& psi) {
    const GridSpec& grid = psi.grid();
    const std::size_t n = grid.n_points;
    const auto spectrum = transform(psi.samples(), FFTW_FORWARD);
    const auto p = momentum_grid(grid);
    const double scale = grid.dx() / static_cast<double>(n);
    MomentumDensity out;
    out.spacing = 2.0 * std::numbers::pi / (static_cast<double>(n) * grid.dx());
    out.nodes.reserve(n);
    out.weights.reserve(n);
    // FFT order -> increasing p: indices n/2 .. n-1 carry the negative modes
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = (i + n / 2) % n;
        out.nodes.push_back(p[k]);
        out.weights.push_back(std::norm(spectrum[k]) * scale);
    }
    return out;
}

BasisAverage basis_average_check(const SystemState& pre, const FiniteObservable& obs,
                                 std::span<const SystemState> basis, double coupling,
                                 const MeterWaveFunction& psi) {
    const auto dim = obs.dimension();
    if (static_cast<Eigen::Index>(basis.size()) != dim) {
        throw NonOrthonormalBasis("basis must contain exactly dim(H) states");
    }
    for (std::size_t a = 0; a < basis.size(); ++a) {
        if (basis[a].dimension() != dim) {
            throw NonOrthonormalBasis("basis state dimension differs from the observable");
        }
        for (std::size_t b = 0; b <= a; ++b) {
            const Complex expected = a == b ? Complex{1.0} : Complex{};
            if (std::abs(basis[a].inner(basis[b]) - expected) > kBasisTolerance) {
                throw NonOrthonormalBasis("basis states are not orthonormal within 1e-10");
            }
        }
    }

    const RawMoments initial = raw_moments(psi);
    const double e_q = initial.q1 / initial.norm2;
    const double e_p = initial.p1 / initial.norm2;
    BasisAverage out;
    for (const SystemState& post : basis) {
        const auto coeffs = overlap_coefficients(pre, post, obs);
        const auto final_state = apply_transition(coeffs.c, obs.eigenvalues(), coupling, psi);
        const RawMoments m = raw_moments(final_state);
        // r (E_X(psi_f) - E_X(psi_i)) with r = norm2_f / norm2_i, free of 0/0
        out.shift_q += (m.q1 - m.norm2 * e_q) / initial.norm2;
        out.shift_p += (m.p1 - m.norm2 * e_p) / initial.norm2;
    }
    return out;
}

MeterStatistics conventional_meter_statistics(const SystemState& pre,
                                              const FiniteObservable& obs, double coupling,
                                              const MeterWaveFunction& psi) {
    const auto& values = obs.eigenvalues();
    RawMoments mix;
    for (std::size_t n = 0; n < values.size(); ++n) {
        const double weight = pre.amplitudes().dot(obs.projectors()[n] * pre.amplitudes()).real();
        const Complex one{1.0};
        const auto shifted =
            apply_transition(std::span(&one, 1), std::span(&values[n], 1), coupling, psi);
        const RawMoments m = raw_moments(shifted);
        mix.norm2 += weight * m.norm2;
        mix.q1 += weight * m.q1;
        mix.q2 += weight * m.q2;
        mix.p1 += weight * m.p1;
        mix.p2 += weight * m.p2;
    }
    MeterStatistics s;
    s.norm2 = mix.norm2;
    s.e_q = mix.q1 / mix.norm2;
    s.e_p = mix.p1 / mix.norm2;
    s.var_q = clamp_variance(mix.q2 / mix.norm2 - s.e_q * s.e_q, "position");
    s.var_p = clamp_variance(mix.p2 / mix.norm2 - s.e_p * s.e_p, "momentum");
    return s;
}

} // namespace wvamp::engine
