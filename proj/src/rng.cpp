#include "oic/rng.hpp"

#include <cmath>

namespace oic {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, const std::vector<std::string>& labels) {
  std::uint64_t h = mix64(master);
  for (const auto& label : labels) {
    std::uint64_t f = 0xcbf29ce484222325ULL;
    for (unsigned char ch : label) {
      f ^= ch;
      f *= 0x100000001b3ULL;
    }
    h = mix64(h ^ f);
  }
  return h;
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

double RngStream::exponential(double mean) {
  return -mean * std::log1p(-uniform());
}

std::uint64_t RngStream::index(std::uint64_t k) {
  if (k <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % k;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return r % k;
}

} // namespace oic
