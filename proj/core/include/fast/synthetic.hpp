#pragma once

#include <cstdint>
#include <vector>

namespace fast {

// Unit-norm cluster centers used by gen_synthetic for the same (c, d, seed).
// Throws GenerationError when c centers with pairwise cosine < 0.5 cannot be
// found within the retry bound.
std::vector<std::vector<double>> synthetic_centers(std::uint32_t c, std::uint32_t d,
                                                   std::uint64_t seed);

}  // namespace fast
