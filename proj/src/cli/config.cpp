#include "wvamp/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "wvamp/errors.hpp"

namespace wvamp::cli {

namespace {

struct Entry {
    std::size_t line = 0;
    std::string value;
};

using Entries = std::map<std::string, Entry, std::less<>>;

const std::set<std::string, std::less<>> kScalarKeys = {
    "eigenvalues", "hermitian", "pre", "post_mode", "post", "c", "c_range", "c_phase",
    "d", "g", "g_range", "scan_points", "scan_spacing", "delta_q", "delta_p", "n0", "eta",
    "channels", "check_engine", "mc_trials", "seed", "out",
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool valid_key(std::string_view key) {
    return !key.empty() && std::all_of(key.begin(), key.end(), [](char ch) {
        return (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') || ch == '_' || ch == '.';
    });
}

bool is_projector_key(std::string_view key) { return key.starts_with("projector."); }

Entries tokenize(std::string_view text) {
    Entries entries;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(line_no, "expected `key = value`");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (!valid_key(key)) {
            throw ParseError(line_no, "malformed key '" + std::string(key) + "'");
        }
        if (value.empty()) throw ParseError(line_no, "missing value for `" + std::string(key) + "`");
        if (!kScalarKeys.contains(key) && !is_projector_key(key)) {
            throw ValidationError(line_no, std::string(key), "is not a recognized key");
        }
        auto [it, fresh] = entries.try_emplace(std::string(key), Entry{line_no, std::string(value)});
        if (!fresh) {
            throw ValidationError(line_no, std::string(key),
                                  "is given more than once (first on line " +
                                      std::to_string(it->second.line) + ")");
        }
    }
    return entries;
}

class Reader {
public:
    explicit Reader(Entries entries) : entries_(std::move(entries)) {}

    [[nodiscard]] const Entry* find(std::string_view key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second;
    }
    [[nodiscard]] bool has(std::string_view key) const { return find(key) != nullptr; }
    [[nodiscard]] std::size_t line(std::string_view key) const {
        const Entry* e = find(key);
        return e ? e->line : 0;
    }

    const Entry& require(std::string_view key) const {
        const Entry* e = find(key);
        if (!e) throw ValidationError(0, std::string(key), "is required but missing");
        return *e;
    }

    [[noreturn]] void fail(std::string_view key, const std::string& message) const {
        throw ValidationError(line(key), std::string(key), message);
    }

    double number(std::string_view key, std::string_view token) const {
        double v = 0.0;
        const auto* end = token.data() + token.size();
        const auto [ptr, ec] = std::from_chars(token.data(), end, v);
        if (ec != std::errc{} || ptr != end) {
            fail(key, "expects a number, got '" + std::string(token) + "'");
        }
        if (!std::isfinite(v)) fail(key, "must be finite");
        return v;
    }

    std::vector<double> numbers(std::string_view key) const {
        const Entry& e = require(key);
        std::vector<double> out;
        std::string_view rest = e.value;
        while (true) {
            const auto comma = rest.find(',');
            const auto token = trim(rest.substr(0, comma));
            if (token.empty()) fail(key, "has an empty list element");
            out.push_back(number(key, token));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        return out;
    }

    double scalar(std::string_view key) const {
        const auto v = numbers(key);
        if (v.size() != 1) fail(key, "expects a single number");
        return v.front();
    }

    double scalar_or(std::string_view key, double fallback) const {
        return has(key) ? scalar(key) : fallback;
    }

    std::int64_t integer(std::string_view key) const {
        const std::string_view token = trim(require(key).value);
        std::int64_t v = 0;
        const auto* end = token.data() + token.size();
        if (auto [ptr, ec] = std::from_chars(token.data(), end, v); ec == std::errc{} && ptr == end) {
            return v;
        }
        // accept exactly integral decimal notation such as 1e7
        const double d = number(key, token);
        if (d != std::floor(d) || std::abs(d) > 9.0e15) {
            fail(key, "expects an integer, got '" + std::string(token) + "'");
        }
        return static_cast<std::int64_t>(d);
    }

    std::uint64_t unsigned_integer(std::string_view key) const {
        const std::string_view token = trim(require(key).value);
        std::uint64_t v = 0;
        const auto* end = token.data() + token.size();
        const auto [ptr, ec] = std::from_chars(token.data(), end, v);
        if (ec != std::errc{} || ptr != end) {
            fail(key, "expects an unsigned 64-bit integer, got '" + std::string(token) + "'");
        }
        return v;
    }

    bool boolean(std::string_view key) const {
        const std::string_view token = require(key).value;
        if (token == "true") return true;
        if (token == "false") return false;
        fail(key, "expects `true` or `false`");
    }

    std::string word(std::string_view key) const { return require(key).value; }

    void forbid(std::string_view key, const std::string& why) const {
        if (has(key)) fail(key, why);
    }

    [[nodiscard]] const Entries& entries() const noexcept { return entries_; }

private:
    Entries entries_;
};

Eigen::VectorXcd complex_vector(const Reader& in, std::string_view key) {
    const auto v = in.numbers(key);
    if (v.size() % 2 != 0) in.fail(key, "expects re, im pairs (an even count of numbers)");
    Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size() / 2));
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        out(i) = Complex{v[2 * static_cast<std::size_t>(i)], v[2 * static_cast<std::size_t>(i) + 1]};
    }
    return out;
}

Eigen::VectorXcd state_vector(const Reader& in, std::string_view key, Eigen::Index dim) {
    Eigen::VectorXcd v = complex_vector(in, key);
    if (v.size() != dim) {
        in.fail(key, "has " + std::to_string(v.size()) + " amplitudes but the observable acts on "
                         "dimension " + std::to_string(dim));
    }
    const double n = v.norm();
    if (!(n > 0.0)) in.fail(key, "must not be the zero vector");
    return v / n;
}

Range positive_range(const Reader& in, std::string_view key) {
    const auto v = in.numbers(key);
    if (v.size() != 2) in.fail(key, "expects `start, stop`");
    if (!(v[0] > 0.0 && v[1] > 0.0)) in.fail(key, "endpoints must be > 0");
    if (v[0] == v[1]) in.fail(key, "endpoints must differ");
    return {v[0], v[1]};
}

void read_observable(const Reader& in, RunConfig& cfg) {
    std::vector<std::string> projector_keys;
    for (const auto& [key, entry] : in.entries()) {
        if (is_projector_key(key)) projector_keys.push_back(key);
    }
    const std::string_view spectrum_key = in.has("hermitian") ? "hermitian" : "eigenvalues";

    if (in.has("hermitian")) {
        in.forbid("eigenvalues", "must be omitted when `hermitian` is given");
        if (!projector_keys.empty()) {
            in.fail(projector_keys.front(), "cannot be combined with `hermitian`");
        }
        const auto h = in.numbers("hermitian");
        if (h.size() != 4) in.fail("hermitian", "expects `a11, re12, im12, a22`");
        Eigen::Matrix2cd m;
        m << Complex{h[0]}, Complex{h[1], h[2]}, Complex{h[1], -h[2]}, Complex{h[3]};
        try {
            const auto obs = FiniteObservable::from_hermitian(m);
            cfg.eigenvalues = obs.eigenvalues();
            cfg.projectors = obs.projectors();
        } catch (const std::invalid_argument& e) {
            in.fail("hermitian", e.what());
        }
    } else {
        cfg.eigenvalues = in.numbers("eigenvalues");
        if (!projector_keys.empty()) {
            const std::size_t n = cfg.eigenvalues.size();
            for (std::size_t k = 1; k <= n; ++k) {
                const std::string key = "projector." + std::to_string(k);
                const auto v = in.numbers(key);
                const auto side = static_cast<Eigen::Index>(std::lround(std::sqrt(v.size() / 2.0)));
                if (side < 2 || static_cast<std::size_t>(2 * side * side) != v.size()) {
                    in.fail(key, "expects 2 D^2 numbers (re, im, row-major) for some D >= 2");
                }
                Eigen::MatrixXcd e(side, side);
                for (Eigen::Index r = 0; r < side; ++r) {
                    for (Eigen::Index c = 0; c < side; ++c) {
                        const auto i = static_cast<std::size_t>(2 * (r * side + c));
                        e(r, c) = Complex{v[i], v[i + 1]};
                    }
                }
                cfg.projectors.push_back(std::move(e));
            }
            for (const auto& key : projector_keys) {
                const auto index = key.substr(std::string_view("projector.").size());
                std::size_t k = 0;
                const auto [ptr, ec] = std::from_chars(index.data(), index.data() + index.size(), k);
                if (ec != std::errc{} || ptr != index.data() + index.size() || k < 1 || k > n) {
                    in.fail(key, "does not match an eigenvalue index 1.." + std::to_string(n));
                }
            }
        }
    }

    try {
        const auto obs = cfg.observable();
        if (obs.spectrum_size() != 2) {
            in.fail(spectrum_key, "must define exactly two distinct eigenvalues");
        }
    } catch (const std::invalid_argument& e) {
        in.fail(projector_keys.empty() ? spectrum_key : std::string_view(projector_keys.front()),
                e.what());
    }
}

} // namespace

FiniteObservable RunConfig::observable() const {
    if (projectors.empty()) return FiniteObservable::diagonal(eigenvalues);
    return {eigenvalues, projectors};
}

SystemState RunConfig::preselection() const { return SystemState::normalized(pre); }

ScanVariable RunConfig::scan_variable() const {
    if (post_mode == PostMode::scan) return ScanVariable::c_abs;
    if (g_range) return ScanVariable::g;
    return ScanVariable::none;
}

std::size_t RunConfig::row_count() const {
    return scan_variable() == ScanVariable::none ? 1 : scan_points;
}

MeasurementConfig RunConfig::measurement(double g) const {
    MeasurementConfig m;
    m.coupling = g;
    m.delta_q = delta_q;
    m.delta_p = delta_p;
    m.n0 = n0;
    m.eta = eta;
    return m;
}

RunConfig parse_config(std::string_view text) {
    const Reader in(tokenize(text));
    RunConfig cfg;

    read_observable(in, cfg);
    const auto obs = cfg.observable();
    cfg.pre = state_vector(in, "pre", obs.dimension());

    const std::string mode = in.word("post_mode");
    if (mode == "state") {
        cfg.post_mode = PostMode::state;
    } else if (mode == "amplify") {
        cfg.post_mode = PostMode::amplify;
    } else if (mode == "scan") {
        cfg.post_mode = PostMode::scan;
    } else {
        in.fail("post_mode", "must be one of `state`, `amplify`, `scan`");
    }

    const std::string only_state = "is only valid with post_mode = state";
    const std::string only_amplify = "is only valid with post_mode = amplify";
    const std::string only_scan = "is only valid with post_mode = scan";
    switch (cfg.post_mode) {
    case PostMode::state:
        cfg.post = state_vector(in, "post", obs.dimension());
        in.forbid("c", only_amplify);
        in.forbid("c_range", only_scan);
        in.forbid("c_phase", only_scan);
        break;
    case PostMode::amplify: {
        in.forbid("post", only_state);
        in.forbid("c_range", only_scan);
        in.forbid("c_phase", only_scan);
        const auto c = in.numbers("c");
        if (c.size() != 2) in.fail("c", "expects `re, im`");
        cfg.c = Complex{c[0], c[1]};
        if (cfg.c == Complex{}) in.fail("c", "must be nonzero");
        break;
    }
    case PostMode::scan:
        in.forbid("post", only_state);
        in.forbid("c", only_amplify);
        cfg.c_range = positive_range(in, "c_range");
        cfg.c_phase = in.scalar_or("c_phase", 0.0);
        break;
    }
    if (cfg.post_mode != PostMode::state &&
        expectation_and_variance(cfg.preselection(), obs).variance <= 1e-14) {
        in.fail("pre", "is an eigenstate of the observable; amplification is impossible");
    }

    cfg.width = in.scalar("d");
    if (!(cfg.width > 0.0)) in.fail("d", "must be > 0");

    if (in.has("g") == in.has("g_range")) {
        throw ValidationError(std::max(in.line("g"), in.line("g_range")), "g",
                              "exactly one of `g` and `g_range` must be given");
    }
    if (in.has("g")) {
        cfg.coupling = in.scalar("g");
        if (!(cfg.coupling > 0.0)) in.fail("g", "must be > 0");
    } else {
        if (cfg.post_mode == PostMode::scan) {
            in.fail("g_range", "cannot be combined with post_mode = scan (one scan variable per run)");
        }
        cfg.g_range = positive_range(in, "g_range");
    }

    const bool scanning = cfg.scan_variable() != ScanVariable::none;
    if (in.has("scan_points")) {
        if (!scanning) in.fail("scan_points", "requires a scan (post_mode = scan or g_range)");
        const auto n = in.integer("scan_points");
        if (n < 2 || n > 1'000'000) in.fail("scan_points", "must lie in [2, 1000000]");
        cfg.scan_points = static_cast<std::size_t>(n);
    }
    if (in.has("scan_spacing")) {
        if (!scanning) in.fail("scan_spacing", "requires a scan (post_mode = scan or g_range)");
        const std::string s = in.word("scan_spacing");
        if (s == "log") {
            cfg.spacing = Spacing::log;
        } else if (s == "linear") {
            cfg.spacing = Spacing::linear;
        } else {
            in.fail("scan_spacing", "must be `log` or `linear`");
        }
    }

    cfg.delta_q = in.scalar_or("delta_q", 0.0);
    if (!(cfg.delta_q >= 0.0)) in.fail("delta_q", "must be >= 0");
    cfg.delta_p = in.scalar_or("delta_p", 0.0);
    if (!(cfg.delta_p >= 0.0)) in.fail("delta_p", "must be >= 0");
    cfg.n0 = in.integer("n0");
    if (cfg.n0 < 1) in.fail("n0", "must be >= 1");
    cfg.eta = in.scalar("eta");
    if (!(cfg.eta > 0.0 && cfg.eta < 1.0)) in.fail("eta", "must lie in the open interval (0, 1)");

    if (in.has("channels")) {
        cfg.channel_q = cfg.channel_p = false;
        std::string_view rest = in.word("channels");
        while (true) {
            const auto comma = rest.find(',');
            const auto token = trim(rest.substr(0, comma));
            bool* flag = nullptr;
            if (token == "q") {
                flag = &cfg.channel_q;
            } else if (token == "p") {
                flag = &cfg.channel_p;
            } else {
                in.fail("channels", "accepts only `q` and `p`");
            }
            if (*flag) in.fail("channels", "lists a channel twice");
            *flag = true;
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
    }

    if (in.has("check_engine")) cfg.check_engine = in.boolean("check_engine");
    if (in.has("mc_trials")) {
        cfg.mc_trials = in.integer("mc_trials");
        if (cfg.mc_trials < 0) in.fail("mc_trials", "must be >= 0");
    }
    if (in.has("seed")) cfg.seed = in.unsigned_integer("seed");
    if (in.has("out")) cfg.out = in.word("out");
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open config file " + path.string());
    std::ostringstream text;
    text << file.rdbuf();
    if (file.bad()) throw IoError("cannot read config file " + path.string());
    return parse_config(text.str());
}

} // namespace wvamp::cli
