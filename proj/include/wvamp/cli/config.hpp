#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "wvamp/core.hpp"
#include "wvamp/uncertainty.hpp"

namespace wvamp::cli {

enum class PostMode { state, amplify, scan };
enum class Spacing { log, linear };

/// Which quantity varies from row to row.
enum class ScanVariable { none, c_abs, g };

struct Range {
    double start = 0.0;
    double stop = 0.0;
};

/// Validated run description. See docs/config_format.md for the text format.
struct RunConfig {
    // observable: eigenvalues plus projectors; empty projectors means the
    // diagonal observable diag(eigenvalues) in the computational basis
    std::vector<double> eigenvalues;
    std::vector<Eigen::MatrixXcd> projectors;

    Eigen::VectorXcd pre;  ///< normalized

    PostMode post_mode = PostMode::state;
    Eigen::VectorXcd post;     ///< normalized, post_mode = state
    Complex c;                 ///< post_mode = amplify
    Range c_range;             ///< |c| endpoints, post_mode = scan
    double c_phase = 0.0;      ///< arg c for every scan point, radians

    double width = 1.0;                ///< d
    double coupling = 0.0;             ///< g when no g_range is given
    std::optional<Range> g_range;
    std::size_t scan_points = 101;
    Spacing spacing = Spacing::log;

    double delta_q = 0.0;
    double delta_p = 0.0;
    std::int64_t n0 = 1;
    double eta = 0.5;

    bool channel_q = true;
    bool channel_p = true;

    bool check_engine = false;
    std::int64_t mc_trials = 0;
    std::uint64_t seed = 0;
    std::string out = "-";

    [[nodiscard]] FiniteObservable observable() const;
    [[nodiscard]] SystemState preselection() const;
    [[nodiscard]] ScanVariable scan_variable() const;
    [[nodiscard]] std::size_t row_count() const;

    /// Measurement settings for row `index` (coupling taken from the scan).
    [[nodiscard]] MeasurementConfig measurement(double coupling) const;
};

/// Parses and validates the key-value text. Throws ParseError for malformed
/// lines and ValidationError for well-formed lines with rejected values, both
/// carrying the 1-based line number (0 for a missing required key).
RunConfig parse_config(std::string_view text);

/// Reads `path` and parses it. Throws IoError when the file cannot be read.
RunConfig load_config(const std::filesystem::path& path);

} // namespace wvamp::cli
