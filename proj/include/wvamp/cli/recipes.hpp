#pragma once

#include <string_view>

namespace wvamp::cli {

/// Text of recipes/figure1.cfg, compiled in so `wvamp figure1` needs no files.
std::string_view figure1_recipe();

} // namespace wvamp::cli
