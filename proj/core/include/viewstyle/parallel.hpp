// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace viewstyle {

/// Number of worker threads used by parallel_for. Defaults to the hardware
/// concurrency; 0 restores that default.
void set_thread_count(unsigned count);
unsigned thread_count();

/// Runs body(i) for every i in [begin, end), split into contiguous chunks.
/// Callers must only write to state owned by index i so that results do not
/// depend on the thread count.
void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end,
                  const std::function<void(std::ptrdiff_t)>& body);

}  // namespace viewstyle
