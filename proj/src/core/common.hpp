#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace dar {

// Thrown for any contract violation (bad config, malformed file, precondition).
// The C API maps these to error codes; the CLI prints the message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

// FNV-1a over raw bytes. Used for parameter checksums and config hashes.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s,
                           std::uint64_t h = 1469598103934665603ull) {
  return fnv1a(s.data(), s.size(), h);
}

std::string hex64(std::uint64_t v);

// splitmix64; used to derive independent substreams from one master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d4db3e97f4b8f2ull;
  return z ^ (z >> 31);
}

// Deterministic named substream: same (seed, name) always yields the same
// generator, independent of call order elsewhere in the program.
inline std::mt19937_64 substream(std::uint64_t seed, const std::string& name) {
  std::uint64_t s = fnv1a(name, seed ^ 0x5bf03635f0c2b9a1ull);
  std::uint64_t st = s;
  std::uint64_t a = splitmix64(st);
  std::uint64_t b = splitmix64(st);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace dar
