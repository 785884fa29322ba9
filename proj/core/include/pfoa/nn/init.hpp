#pragma once

#include <cstdint>
#include <vector>

#include "pfoa/nn/tensor.hpp"

namespace pfoa::nn {

/// He (Kaiming) normal initialization: i.i.d. N(0, 2/fan_in) draws.
std::vector<double> he_init(const Shape& shape, int fan_in, std::uint64_t seed);

}  // namespace pfoa::nn
