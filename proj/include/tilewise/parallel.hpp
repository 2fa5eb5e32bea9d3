// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal fork-join helper. TILEWISE_THREADS caps the worker count.

#pragma once

#include <cstddef>
#include <functional>

namespace tilewise {

// Worker cap: TILEWISE_THREADS if set (clamped to >= 1), else hardware concurrency.
int thread_budget();

// Runs fn(i) for i in [0, n). Chunked over at most thread_budget() threads;
// callers must make writes disjoint so results do not depend on the split.
// The first exception thrown by any chunk is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace tilewise
