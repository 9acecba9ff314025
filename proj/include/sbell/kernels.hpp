#pragma once

// Reductions over ±1 outcome columns. Every statistic in chsh_stats reduces
// to one of these, so they are the only hot loops in the library. Each has a
// scalar reference and, where the target allows, a vector variant; `active()`
// picks the best one supported by the running CPU.

#include <cstdint>
#include <span>
#include <string_view>

namespace sbell::kernels {

struct Table {
  std::string_view name;
  /// Σ v[i]
  std::int64_t (*sum_i8)(std::span<const std::int8_t> v);
  /// Σ a[i]·b[i]; spans must have equal length.
  std::int64_t (*dot_i8)(std::span<const std::int8_t> a, std::span<const std::int8_t> b);
  /// Σ w[i]·v[i]; spans must have equal length.
  std::int64_t (*weighted_sum_i32_i8)(std::span<const std::int32_t> w,
                                      std::span<const std::int8_t> v);
};

const Table& scalar();

/// AVX2 table, or nullptr when not compiled in or not supported by this CPU.
const Table* avx2();

/// NEON table, or nullptr when not compiled in.
const Table* neon();

/// Best available table. Setting SBELL_KERNELS=scalar in the environment
/// forces the reference path.
const Table& active();

}  // namespace sbell::kernels
