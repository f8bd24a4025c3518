#include "wvamp/cli/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <variant>

#include "wvamp/errors.hpp"

namespace wvamp::cli {

namespace {

using Cell = std::variant<std::optional<double>, std::optional<bool>, std::string>;

struct Column {
    std::string_view name;
    bool (*enabled)(const ScanLayout&);
    std::function<Cell(const ScanRow&)> get;
};

bool always(const ScanLayout&) { return true; }
bool q_enabled(const ScanLayout& l) { return l.channel_q; }
bool p_enabled(const ScanLayout& l) { return l.channel_p; }
bool engine_enabled(const ScanLayout& l) { return l.engine; }
bool mc_q_enabled(const ScanLayout& l) { return l.montecarlo && l.channel_q; }
bool mc_p_enabled(const ScanLayout& l) { return l.montecarlo && l.channel_p; }

template <auto Member>
std::function<Cell(const ScanRow&)> field() {
    return [](const ScanRow& row) -> Cell { return row.*Member; };
}

std::string join_reasons(const ScanRow& row) {
    std::string out;
    for (const auto& r : row.reasons) {
        if (!out.empty()) out += ';';
        out += r;
    }
    return out;
}

// Columns after the scan-variable column, in emission order.
const std::vector<Column>& columns() {
    static const std::vector<Column> table = {
        {"re_aw", always, field<&ScanRow::re_aw>()},
        {"im_aw", always, field<&ScanRow::im_aw>()},
        {"survival_rate", always, field<&ScanRow::survival_rate>()},
        {"shift_q", always, field<&ScanRow::shift_q>()},
        {"shift_p", always, field<&ScanRow::shift_p>()},
        {"var_q", always, field<&ScanRow::var_q>()},
        {"var_p", always, field<&ScanRow::var_p>()},
        {"eps_sys_q", q_enabled, field<&ScanRow::eps_sys_q>()},
        {"eps_stat_q", q_enabled, field<&ScanRow::eps_stat_q>()},
        {"eps_nl_q", q_enabled, field<&ScanRow::eps_nl_q>()},
        {"eps_w_q", q_enabled, field<&ScanRow::eps_w_q>()},
        {"kappa_q", q_enabled, field<&ScanRow::kappa_q>()},
        {"ratio_q", q_enabled, field<&ScanRow::ratio_q>()},
        {"eps_c_q", q_enabled, field<&ScanRow::eps_c_q>()},
        {"significant_c_q", q_enabled, field<&ScanRow::significant_c_q>()},
        {"significant_w_q", q_enabled, field<&ScanRow::significant_w_q>()},
        {"eps_sys_p", p_enabled, field<&ScanRow::eps_sys_p>()},
        {"eps_stat_p", p_enabled, field<&ScanRow::eps_stat_p>()},
        {"eps_nl_p", p_enabled, field<&ScanRow::eps_nl_p>()},
        {"eps_w_p", p_enabled, field<&ScanRow::eps_w_p>()},
        {"kappa_p", p_enabled, field<&ScanRow::kappa_p>()},
        {"ratio_p", p_enabled, field<&ScanRow::ratio_p>()},
        {"significant_w_p", p_enabled, field<&ScanRow::significant_w_p>()},
        {"engine_max_rel_dev", engine_enabled, field<&ScanRow::engine_max_rel_dev>()},
        {"engine_ok", engine_enabled, field<&ScanRow::engine_ok>()},
        {"mc_coverage_q", mc_q_enabled, field<&ScanRow::mc_coverage_q>()},
        {"mc_bound_q", mc_q_enabled, field<&ScanRow::mc_bound_q>()},
        {"mc_budget_coverage_q", mc_q_enabled, field<&ScanRow::mc_budget_coverage_q>()},
        {"mc_passed_q", mc_q_enabled, field<&ScanRow::mc_passed_q>()},
        {"mc_coverage_p", mc_p_enabled, field<&ScanRow::mc_coverage_p>()},
        {"mc_bound_p", mc_p_enabled, field<&ScanRow::mc_bound_p>()},
        {"mc_budget_coverage_p", mc_p_enabled, field<&ScanRow::mc_budget_coverage_p>()},
        {"mc_passed_p", mc_p_enabled, field<&ScanRow::mc_passed_p>()},
        {"reason", always, [](const ScanRow& row) -> Cell { return join_reasons(row); }},
    };
    return table;
}

std::string_view scan_column(ScanVariable v) {
    switch (v) {
    case ScanVariable::c_abs:
        return "c_abs";
    case ScanVariable::g:
        return "g";
    case ScanVariable::none:
        break;
    }
    return "point";
}

struct CellText {
    std::string operator()(const std::optional<double>& v) const {
        return v && std::isfinite(*v) ? format_double(*v) : "NA";
    }
    std::string operator()(const std::optional<bool>& v) const {
        if (!v) return "NA";
        return *v ? "true" : "false";
    }
    std::string operator()(const std::string& s) const { return s; }
};

void write_record(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << quote_field(fields[i]);
    }
    out << '\n';
}

} // namespace

std::string format_double(double value) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) throw std::logic_error("to_chars failed");
    return {buf.data(), ptr};
}

std::string quote_field(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

std::vector<std::string> csv_header(const ScanLayout& layout) {
    std::vector<std::string> out{std::string(scan_column(layout.variable))};
    for (const auto& col : columns()) {
        if (col.enabled(layout)) out.emplace_back(col.name);
    }
    return out;
}

std::vector<std::string> csv_record(const ScanRow& row, const ScanLayout& layout) {
    std::vector<std::string> out{format_double(row.scan_value)};
    for (const auto& col : columns()) {
        if (col.enabled(layout)) out.push_back(std::visit(CellText{}, col.get(row)));
    }
    return out;
}

void write_csv(const ScanResult& result, std::ostream& out) {
    write_record(out, csv_header(result.layout));
    for (const auto& row : result.rows) write_record(out, csv_record(row, result.layout));
}

void emit_csv(const ScanResult& result, const std::filesystem::path& path) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open " + path.string() + " for writing");
    write_csv(result, file);
    file.flush();
    if (!file) throw IoError("failed writing " + path.string());
}

} // namespace wvamp::cli
