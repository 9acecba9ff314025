#include <immintrin.h>

#include <stdexcept>

#include "sbell/kernels.hpp"

namespace sbell::kernels {
namespace {

std::int64_t hsum_epi64(__m256i v) {
  alignas(32) std::int64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
  return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

// Sign-extends the four int32 lanes of each half into int64 and adds them.
__m256i widen_add_epi32(__m256i acc64, __m256i v32) {
  acc64 = _mm256_add_epi64(acc64, _mm256_cvtepi32_epi64(_mm256_castsi256_si128(v32)));
  return _mm256_add_epi64(acc64, _mm256_cvtepi32_epi64(_mm256_extracti128_si256(v32, 1)));
}

std::int64_t sum_i8_avx2(std::span<const std::int8_t> v) {
  const std::size_t n = v.size();
  const auto* p = reinterpret_cast<const unsigned char*>(v.data());
  const __m256i bias = _mm256_set1_epi8(static_cast<char>(0x80));
  const __m256i zero = _mm256_setzero_si256();
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  // x ^ 0x80 reinterprets int8 x as uint8 x + 128; SAD against zero sums bytes into u64 lanes.
  for (; i + 32 <= n; i += 32) {
    const __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p + i));
    acc = _mm256_add_epi64(acc, _mm256_sad_epu8(_mm256_xor_si256(x, bias), zero));
  }
  std::int64_t s = hsum_epi64(acc) - 128 * static_cast<std::int64_t>(i);
  for (; i < n; ++i) s += v[i];
  return s;
}

std::int64_t dot_i8_avx2(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kernels: operand lengths differ");
  const std::size_t n = a.size();
  __m256i acc64 = _mm256_setzero_si256();
  std::size_t i = 0;
  while (i + 16 <= n) {
    // Each madd lane is at most 2·128² = 32768 in magnitude; 4096 rounds stay well inside int32.
    __m256i acc32 = _mm256_setzero_si256();
    for (int round = 0; round < 4096 && i + 16 <= n; ++round, i += 16) {
      const __m256i x = _mm256_cvtepi8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(a.data() + i)));
      const __m256i y = _mm256_cvtepi8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(b.data() + i)));
      acc32 = _mm256_add_epi32(acc32, _mm256_madd_epi16(x, y));
    }
    acc64 = widen_add_epi32(acc64, acc32);
  }
  std::int64_t s = hsum_epi64(acc64);
  for (; i < n; ++i) s += std::int64_t{a[i]} * b[i];
  return s;
}

std::int64_t weighted_sum_avx2(std::span<const std::int32_t> w, std::span<const std::int8_t> v) {
  if (w.size() != v.size()) throw std::invalid_argument("kernels: operand lengths differ");
  const std::size_t n = w.size();
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256i ww = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(w.data() + i));
    const __m256i vv = _mm256_cvtepi8_epi32(_mm_loadl_epi64(reinterpret_cast<const __m128i*>(v.data() + i)));
    // mul_epi32 multiplies the even int32 lanes into int64; shift to reach the odd ones.
    acc = _mm256_add_epi64(acc, _mm256_mul_epi32(ww, vv));
    acc = _mm256_add_epi64(acc, _mm256_mul_epi32(_mm256_srli_epi64(ww, 32), _mm256_srli_epi64(vv, 32)));
  }
  std::int64_t s = hsum_epi64(acc);
  for (; i < n; ++i) s += std::int64_t{w[i]} * v[i];
  return s;
}

constexpr Table kAvx2{"avx2", &sum_i8_avx2, &dot_i8_avx2, &weighted_sum_avx2};

}  // namespace

namespace detail {
const Table* avx2_table() { return &kAvx2; }
}  // namespace detail

}  // namespace sbell::kernels
