#include "sbell/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string_view>

namespace sbell::kernels {

namespace detail {
const Table* avx2_table();
const Table* neon_table();
}  // namespace detail

namespace {

void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("kernels: operand lengths differ");
}

std::int64_t sum_i8_scalar(std::span<const std::int8_t> v) {
  std::int64_t s = 0;
  for (std::int8_t x : v) s += x;
  return s;
}

std::int64_t dot_i8_scalar(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
  require_same_size(a.size(), b.size());
  std::int64_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::int64_t{a[i]} * b[i];
  return s;
}

std::int64_t weighted_sum_scalar(std::span<const std::int32_t> w, std::span<const std::int8_t> v) {
  require_same_size(w.size(), v.size());
  std::int64_t s = 0;
  for (std::size_t i = 0; i < w.size(); ++i) s += std::int64_t{w[i]} * v[i];
  return s;
}

constexpr Table kScalar{"scalar", &sum_i8_scalar, &dot_i8_scalar, &weighted_sum_scalar};

bool forced_scalar() {
  const char* env = std::getenv("SBELL_KERNELS");
  return env != nullptr && std::string_view(env) == "scalar";
}

}  // namespace

const Table& scalar() { return kScalar; }

const Table* avx2() {
#if defined(SBELL_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return detail::avx2_table();
#endif
  return nullptr;
}

const Table* neon() {
#if defined(SBELL_HAVE_NEON)
  return detail::neon_table();
#else
  return nullptr;
#endif
}

const Table& active() {
  static const Table* chosen = [] {
    if (forced_scalar()) return &kScalar;
    if (const Table* t = avx2()) return t;
    if (const Table* t = neon()) return t;
    return &kScalar;
  }();
  return *chosen;
}

}  // namespace sbell::kernels
