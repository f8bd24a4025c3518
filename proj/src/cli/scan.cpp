#include "wvamp/cli/scan.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "wvamp/engine.hpp"
#include "wvamp/errors.hpp"
#include "wvamp/gaussian.hpp"
#include "wvamp/montecarlo.hpp"

namespace wvamp::cli {

namespace {

void note(ScanRow& row, std::string_view column, std::string_view code) {
    row.reasons.push_back(std::string(column) + ":" + std::string(code));
}

SystemState postselection(const RunConfig& cfg, const SystemState& pre,
                          const FiniteObservable& obs, double scan_value) {
    switch (cfg.post_mode) {
    case PostMode::state:
        return SystemState::normalized(cfg.post);
    case PostMode::amplify:
        return amplified_postselection(pre, obs, cfg.c);
    case PostMode::scan:
        return amplified_postselection(pre, obs, std::polar(scan_value, cfg.c_phase));
    }
    throw std::logic_error("unknown post_mode");
}

struct Budget {
    std::optional<double> systematic, statistical, nonlinear, total, kappa, ratio;
    std::optional<bool> significant;
};

template <typename Compute>
Budget weak_budget(ScanRow& row, std::string_view channel, double target, Compute&& compute) {
    Budget b;
    try {
        const UncertaintyBreakdown u = compute();
        b.systematic = u.systematic;
        b.statistical = u.statistical;
        b.nonlinear = u.nonlinear;
        b.total = u.total;
        b.kappa = u.kappa;
        b.significant = u.total <= std::abs(target);
        if (target != 0.0) {
            b.ratio = u.total / std::abs(target);
        } else {
            note(row, "ratio_" + std::string(channel), "zero_weak_value");
        }
    } catch (const Error& e) {
        note(row, "eps_w_" + std::string(channel), e.code());
    }
    return b;
}

// Shifts that vanish in closed form are measured against a millionth of the
// meter spread instead of a fixed floor.
constexpr double kShiftFloor = 1e-6;

double relative_deviation(double numeric, double closed, double floor = 1e-10) {
    return std::abs(numeric - closed) / std::max(std::abs(closed), floor);
}

void engine_check(ScanRow& row, const OverlapCoefficients& coeffs, const FiniteObservable& obs,
                  double g, double width) {
    try {
        double max_shift = 0.0;
        for (double l : obs.eigenvalues()) max_shift = std::max(max_shift, std::abs(g * l));
        const auto grid = engine::GridSpec::default_for(width, max_shift);
        const auto initial = engine::build_gaussian(grid, width);
        const auto final_state =
            engine::apply_transition(coeffs.c, obs.eigenvalues(), g, initial);
        const auto stats = engine::meter_statistics(final_state);
        double dev = relative_deviation(stats.norm2 / initial.norm2(), *row.survival_rate);
        dev = std::max(dev, relative_deviation(stats.e_q, *row.shift_q,
                                               kShiftFloor * std::sqrt(stats.var_q)));
        dev = std::max(dev, relative_deviation(stats.e_p, *row.shift_p,
                                               kShiftFloor * std::sqrt(stats.var_p)));
        if (row.var_q) dev = std::max(dev, relative_deviation(stats.var_q, *row.var_q));
        if (row.var_p) dev = std::max(dev, relative_deviation(stats.var_p, *row.var_p));
        row.engine_max_rel_dev = dev;
        row.engine_ok = dev <= kEngineAgreement;
    } catch (const Error& e) {
        note(row, "engine_max_rel_dev", e.code());
    }
}

void montecarlo_check(ScanRow& row, const RunConfig& cfg, const MeasurementConfig& mcfg,
                      const GaussianModelPoint& pt, Complex overlap, montecarlo::Channel channel,
                      std::uint64_t seed) {
    const bool is_q = channel == montecarlo::Channel::q;
    try {
        const auto report = montecarlo::coverage_test(mcfg, pt, overlap, channel, cfg.mc_trials, seed);
        (is_q ? row.mc_coverage_q : row.mc_coverage_p) = report.empirical_coverage;
        (is_q ? row.mc_bound_q : row.mc_bound_p) = report.bound;
        (is_q ? row.mc_budget_coverage_q : row.mc_budget_coverage_p) = report.budget_coverage;
        (is_q ? row.mc_passed_q : row.mc_passed_p) = report.passed;
    } catch (const Error& e) {
        note(row, is_q ? "mc_coverage_q" : "mc_coverage_p", e.code());
    }
}

ScanRow compute_row(const RunConfig& cfg, const FiniteObservable& obs, const SystemState& pre,
                    std::size_t index, double scan_value) {
    ScanRow row;
    row.scan_value = scan_value;
    const double g = cfg.scan_variable() == ScanVariable::g ? scan_value : cfg.coupling;
    const GaussianMeter meter(cfg.width);
    const MeasurementConfig mcfg = cfg.measurement(g);

    if (cfg.channel_q) {
        const auto conventional = conventional_uncertainty(mcfg, pre, obs, meter);
        row.eps_c_q = conventional.total;
        row.significant_c_q =
            conventional.total <= std::abs(expectation_and_variance(pre, obs).mean);
    }

    const SystemState post = postselection(cfg, pre, obs, scan_value);
    const auto coeffs = overlap_coefficients(pre, post, obs);
    TwoPointParameters params;
    try {
        params = two_point_parameters(coeffs, obs);
    } catch (const OrthogonalSelections& e) {
        note(row, "re_aw", e.code());
        return row;
    }
    const GaussianModelPoint pt(g, params, meter);
    row.re_aw = params.weak_value.real();
    row.im_aw = params.weak_value.imag();
    row.survival_rate = survival_rate(pt, coeffs.total_overlap);
    row.shift_q = shift_q(pt);
    row.shift_p = shift_p(pt);
    try {
        row.var_q = variance_q(pt);
    } catch (const NonPositiveVariance& e) {
        note(row, "var_q", e.code());
    }
    try {
        row.var_p = variance_p(pt);
    } catch (const NonPositiveVariance& e) {
        note(row, "var_p", e.code());
    }

    if (cfg.channel_q) {
        const auto b = weak_budget(row, "q", params.weak_value.real(), [&] {
            return weak_uncertainty_q(mcfg, pt, coeffs.total_overlap);
        });
        row.eps_sys_q = b.systematic;
        row.eps_stat_q = b.statistical;
        row.eps_nl_q = b.nonlinear;
        row.eps_w_q = b.total;
        row.kappa_q = b.kappa;
        row.ratio_q = b.ratio;
        row.significant_w_q = b.significant;
    }
    if (cfg.channel_p) {
        const auto b = weak_budget(row, "p", params.weak_value.imag(), [&] {
            return weak_uncertainty_p(mcfg, pt, coeffs.total_overlap);
        });
        row.eps_sys_p = b.systematic;
        row.eps_stat_p = b.statistical;
        row.eps_nl_p = b.nonlinear;
        row.eps_w_p = b.total;
        row.kappa_p = b.kappa;
        row.ratio_p = b.ratio;
        row.significant_w_p = b.significant;
    }

    if (cfg.check_engine) engine_check(row, coeffs, obs, g, cfg.width);
    if (cfg.mc_trials > 0) {
        const auto base = static_cast<std::uint64_t>(index) * 2;
        if (cfg.channel_q) {
            montecarlo_check(row, cfg, mcfg, pt, coeffs.total_overlap, montecarlo::Channel::q,
                             montecarlo::trial_seed(cfg.seed, base));
        }
        if (cfg.channel_p) {
            montecarlo_check(row, cfg, mcfg, pt, coeffs.total_overlap, montecarlo::Channel::p,
                             montecarlo::trial_seed(cfg.seed, base + 1));
        }
    }
    return row;
}

} // namespace

ScanLayout ScanLayout::from(const RunConfig& cfg) {
    ScanLayout layout;
    layout.variable = cfg.scan_variable();
    layout.channel_q = cfg.channel_q;
    layout.channel_p = cfg.channel_p;
    layout.engine = cfg.check_engine;
    layout.montecarlo = cfg.mc_trials > 0;
    return layout;
}

std::vector<double> scan_values(const RunConfig& cfg) {
    Range range;
    switch (cfg.scan_variable()) {
    case ScanVariable::none:
        return {0.0};
    case ScanVariable::c_abs:
        range = cfg.c_range;
        break;
    case ScanVariable::g:
        range = *cfg.g_range;
        break;
    }
    const std::size_t n = cfg.scan_points;
    std::vector<double> values(n);
    const double last = static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / last;
        values[k] = cfg.spacing == Spacing::log
                        ? range.start * std::pow(range.stop / range.start, t)
                        : range.start + (range.stop - range.start) * t;
    }
    values.front() = range.start;
    values.back() = range.stop;
    return values;
}

ScanResult amplification_scan(const RunConfig& cfg) {
    const auto obs = cfg.observable();
    const auto pre = cfg.preselection();
    const auto values = scan_values(cfg);
    ScanResult result;
    result.layout = ScanLayout::from(cfg);
    result.rows.reserve(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        result.rows.push_back(compute_row(cfg, obs, pre, k, values[k]));
    }
    return result;
}

bool all_weak_undefined(const ScanResult& result) {
    return std::all_of(result.rows.begin(), result.rows.end(), [&](const ScanRow& row) {
        const bool q = result.layout.channel_q && row.eps_w_q.has_value();
        const bool p = result.layout.channel_p && row.eps_w_p.has_value();
        return !q && !p;
    });
}

} // namespace wvamp::cli
