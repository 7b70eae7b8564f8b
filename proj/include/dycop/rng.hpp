#pragma once

#include <cstdint>
#include <string_view>

namespace dycop {

// Counter-free splitmix64 generator. Small state, O(1) construction, portable
// across platforms and standard libraries; every random quantity in the
// library flows from one root seed through named sub-streams so that runs are
// reproducible regardless of thread count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform on (0,1); never returns an exact 0 or 1
  double uniform() {
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  // uniform on (lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

namespace rng_detail {
inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  a ^= b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2);
  std::uint64_t z = a;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace rng_detail

// Derive the seed of a named sub-stream, e.g. derive_seed(root, "bootstrap").
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) {
  return rng_detail::mix(root, rng_detail::fnv1a(stream));
}

// Derive the seed of the i-th task inside a sub-stream.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                                 std::uint64_t index) {
  return rng_detail::mix(derive_seed(root, stream), index + 1);
}

}  // namespace dycop
