#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wvamp/cli/config.hpp"

namespace wvamp::cli {

/// Which optional column groups a scan emits.
struct ScanLayout {
    ScanVariable variable = ScanVariable::none;
    bool channel_q = true;
    bool channel_p = true;
    bool engine = false;
    bool montecarlo = false;

    static ScanLayout from(const RunConfig& cfg);
};

/// One scan point. Empty optionals are undefined cells; `reasons` holds
/// `column:code` entries explaining them.
struct ScanRow {
    double scan_value = 0.0;

    std::optional<double> re_aw, im_aw, survival_rate;
    std::optional<double> shift_q, shift_p, var_q, var_p;

    std::optional<double> eps_sys_q, eps_stat_q, eps_nl_q, eps_w_q, kappa_q, ratio_q;
    std::optional<double> eps_c_q;
    std::optional<bool> significant_c_q, significant_w_q;

    std::optional<double> eps_sys_p, eps_stat_p, eps_nl_p, eps_w_p, kappa_p, ratio_p;
    std::optional<bool> significant_w_p;

    std::optional<double> engine_max_rel_dev;
    std::optional<bool> engine_ok;

    std::optional<double> mc_coverage_q, mc_bound_q, mc_budget_coverage_q;
    std::optional<bool> mc_passed_q;
    std::optional<double> mc_coverage_p, mc_bound_p, mc_budget_coverage_p;
    std::optional<bool> mc_passed_p;

    std::vector<std::string> reasons;
};

struct ScanResult {
    ScanLayout layout;
    std::vector<ScanRow> rows;
};

/// Tolerance on the closed-form vs grid deviation behind `engine_ok`.
inline constexpr double kEngineAgreement = 1e-6;

/// Values of the scan variable in row order; {0} when nothing is scanned.
std::vector<double> scan_values(const RunConfig& cfg);

/// Evaluates every scan point. Domain failures become undefined cells with
/// reasons; the scan itself never aborts on them.
ScanResult amplification_scan(const RunConfig& cfg);

/// True when no row has a defined total for any enabled weak channel.
bool all_weak_undefined(const ScanResult& result);

} // namespace wvamp::cli
