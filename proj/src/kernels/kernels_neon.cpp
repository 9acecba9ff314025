#include <arm_neon.h>

#include <stdexcept>

#include "sbell/kernels.hpp"

namespace sbell::kernels {
namespace {

std::int64_t sum_i8_neon(std::span<const std::int8_t> v) {
  const std::size_t n = v.size();
  std::int64_t s = 0;
  std::size_t i = 0;
  while (i + 16 <= n) {
    int32x4_t acc = vdupq_n_s32(0);
    for (int round = 0; round < 8192 && i + 16 <= n; ++round, i += 16) {
      acc = vpadalq_s16(acc, vpaddlq_s8(vld1q_s8(v.data() + i)));
    }
    s += vaddlvq_s32(acc);
  }
  for (; i < n; ++i) s += v[i];
  return s;
}

std::int64_t dot_i8_neon(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kernels: operand lengths differ");
  const std::size_t n = a.size();
  std::int64_t s = 0;
  std::size_t i = 0;
  while (i + 16 <= n) {
    int32x4_t acc = vdupq_n_s32(0);
    for (int round = 0; round < 4096 && i + 16 <= n; ++round, i += 16) {
      const int8x16_t x = vld1q_s8(a.data() + i);
      const int8x16_t y = vld1q_s8(b.data() + i);
      acc = vpadalq_s16(acc, vmull_s8(vget_low_s8(x), vget_low_s8(y)));
      acc = vpadalq_s16(acc, vmull_high_s8(x, y));
    }
    s += vaddlvq_s32(acc);
  }
  for (; i < n; ++i) s += std::int64_t{a[i]} * b[i];
  return s;
}

std::int64_t weighted_sum_neon(std::span<const std::int32_t> w, std::span<const std::int8_t> v) {
  if (w.size() != v.size()) throw std::invalid_argument("kernels: operand lengths differ");
  const std::size_t n = w.size();
  int64x2_t acc = vdupq_n_s64(0);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const int16x8_t v16 = vmovl_s8(vld1_s8(v.data() + i));
    const int32x4_t lo = vmovl_s16(vget_low_s16(v16));
    const int32x4_t hi = vmovl_s16(vget_high_s16(v16));
    const int32x4_t w_lo = vld1q_s32(w.data() + i);
    const int32x4_t w_hi = vld1q_s32(w.data() + i + 4);
    acc = vmlal_s32(acc, vget_low_s32(w_lo), vget_low_s32(lo));
    acc = vmlal_high_s32(acc, w_lo, lo);
    acc = vmlal_s32(acc, vget_low_s32(w_hi), vget_low_s32(hi));
    acc = vmlal_high_s32(acc, w_hi, hi);
  }
  std::int64_t s = vaddvq_s64(acc);
  for (; i < n; ++i) s += std::int64_t{w[i]} * v[i];
  return s;
}

constexpr Table kNeon{"neon", &sum_i8_neon, &dot_i8_neon, &weighted_sum_neon};

}  // namespace

namespace detail {
const Table* neon_table() { return &kNeon; }
}  // namespace detail

}  // namespace sbell::kernels
