#pragma once

#include <span>

#include "mixsel/dataset.hpp"

namespace mixsel {

// Hubert-Arabie adjusted Rand index. Labels are arbitrary integers; the two
// partitions may have different class counts. Degenerate pairs (both single-class
// or both all-singletons) score 1. Throws Error{LengthMismatch}.
double ari(std::span<const int> a, std::span<const int> b);
double ari(const HardPartition& a, const HardPartition& b);

}  // namespace mixsel
