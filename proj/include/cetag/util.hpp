////////////////////////////////////////////////////////////////////////////////
// util.hpp
// Errors, seeded RNG, seed derivation, small shared helpers
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cetag {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CorpusError : Error {
  using Error::Error;
};
struct KnowledgeError : Error {
  using Error::Error;
};
struct ModelError : Error {
  using Error::Error;
};
struct TrainError : Error {
  using Error::Error;
};
struct CheckpointError : Error {
  using Error::Error;
};

// Collects every offending key before failing, so a bad config file is
// reported in one pass.
struct ConfigError : Error {
  std::vector<std::string> issues;
  explicit ConfigError(std::vector<std::string> iss)
      : Error(join(iss)), issues(std::move(iss)) {}

 private:
  static std::string join(const std::vector<std::string>& iss) {
    std::string s = "invalid configuration:";
    for (const auto& i : iss) s += "\n  - " + i;
    return s;
  }
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// One top-level seed fans out into per-stage streams; the same (seed, stage)
// pair always yields the same stream.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) {
  return splitmix64(root ^ fnv1a64(stage));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage,
                                 std::uint64_t index) {
  return splitmix64(derive_seed(root, stage) + 0x632be59bd9b4e019ull * (index + 1));
}

// mt19937_64 with hand-rolled draws so sequences do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // in [0, n)
  std::size_t bounded(std::size_t n) {
    return n == 0 ? 0 : static_cast<std::size_t>(gen_() % n);
  }

  // in [0, 1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    // Box-Muller
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    return mean + stddev * z;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = bounded(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

inline std::string to_hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace cetag
