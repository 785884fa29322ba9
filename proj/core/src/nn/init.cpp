#include "pfoa/nn/init.hpp"

#include <cmath>

#include "pfoa/common/error.hpp"
#include "pfoa/common/rng.hpp"

namespace pfoa::nn {

std::vector<double> he_init(const Shape& shape, int fan_in, std::uint64_t seed) {
    if (fan_in <= 0) throw ValidationError("he_init fan_in must be positive");
    const std::size_t n = shape_numel(shape);
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    Rng rng(seed);
    std::vector<double> out(n);
    for (double& v : out) v = rng.normal(0.0, stddev);
    return out;
}

}  // namespace pfoa::nn
