#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace oic {

/// Seeded random stream.
///
/// Base generator is std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Variates are drawn with the explicit transforms below rather
/// than std distributions, whose algorithms are implementation-defined:
///   uniform      u = (next() >> 11) * 2^-53
///   normal       Marsaglia polar method, second variate cached
///   exponential  -mean * log1p(-u)
///   index(k)     rejection sampling on the top bits
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double exponential(double mean);
  /// Uniform integer in [0, k).
  std::uint64_t index(std::uint64_t k);

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Child seed from a master seed and a label path.
/// Each label is hashed with 64-bit FNV-1a and folded in with mix64.
std::uint64_t derive_seed(std::uint64_t master, const std::vector<std::string>& labels);

namespace detail {
inline std::string to_label(std::string_view s) { return std::string(s); }
inline std::string to_label(const char* s) { return std::string(s); }
inline std::string to_label(const std::string& s) { return s; }
template <class T>
  requires std::is_arithmetic_v<T>
std::string to_label(T v) { return std::to_string(v); }
} // namespace detail

template <class... Labels>
std::uint64_t derive_seed(std::uint64_t master, const Labels&... labels) {
  return derive_seed(master, std::vector<std::string>{detail::to_label(labels)...});
}

/// Stream seeded from (master, labels...).
template <class... Labels>
RngStream rng_stream(std::uint64_t master, const Labels&... labels) {
  return RngStream(derive_seed(master, labels...));
}

} // namespace oic
