#pragma once

#include <algorithm>
#include <cmath>

namespace aiprobe {

// 1-based stratum index of `value` within [lo, hi] split into b equal bins:
// ceil(b * (value - lo) / (hi - lo)), with value == lo mapping to bin 1 and
// out-of-range values clamped to the boundary bins. A degenerate lo == hi
// range maps everything to bin 1.
inline int bin_index(double value, double lo, double hi, int b) {
    if (b < 1) return 1;
    if (hi <= lo) return 1;
    double v = std::clamp(value, lo, hi);
    int bin = static_cast<int>(std::ceil(b * (v - lo) / (hi - lo)));
    return std::clamp(bin, 1, b);
}

} // namespace aiprobe
