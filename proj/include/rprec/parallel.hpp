#pragma once

#include <functional>

#include "rprec/data_matrix.hpp"

namespace rprec {

/// Calls body(i) for every i in [0, count) on at most `jobs` threads
/// (jobs <= 1 runs inline). Each index must write only its own output slot.
/// If any call throws, the exception of the lowest failing index is rethrown
/// after all workers stop.
void parallel_for(Index count, int jobs, const std::function<void(Index)>& body);

}  // namespace rprec
