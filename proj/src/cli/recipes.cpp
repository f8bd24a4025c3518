#include "wvamp/cli/recipes.hpp"

namespace wvamp::cli {

std::string_view figure1_recipe() {
    // keep in sync with recipes/figure1.cfg (checked by the config tests)
    static constexpr std::string_view text = R"cfg(# Amplification window for S_z = diag(1/2, -1/2) with a Gaussian meter.
# |c| runs log-spaced from 0.5 down to 5e-5, so Re A_w = 0.5/|c| sweeps
# 1 .. 1e4 and row 80 sits exactly at Re A_w = 100.
eigenvalues = 0.5, -0.5
pre = 1, 0, 1, 0
post_mode = scan
c_range = 0.5, 5e-5
c_phase = 0
scan_points = 161
scan_spacing = log
d = 4
g = 0.02
n0 = 10000000
delta_q = 0.5
eta = 0.95
channels = q
)cfg";
    return text;
}

} // namespace wvamp::cli
