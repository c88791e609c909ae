#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mbrl {

// splitmix64 step; advances state and returns the next output.
std::uint64_t splitmix64(std::uint64_t& state);

// FNV-1a over the bytes of a tag string.
std::uint64_t hash_tag(const std::string& tag);

// Deterministic seed derivation: root seed -> component seed.
// derive_seed(root, tag, i) = mix(mix(root) ^ fnv1a(tag) ^ golden * (i+1)).
// Every component of the pipeline draws its seed through this single map,
// so one root seed pins the whole run.
std::uint64_t derive_seed(std::uint64_t root, const std::string& tag,
                          std::uint64_t index = 0);

// Deterministic RNG wrapper around mt19937_64.
//
// Normal variates use explicit Box-Muller instead of
// std::normal_distribution, whose output sequence is not pinned by the
// standard; this keeps artifacts byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                            // [0, 1)
  double uniform(double lo, double hi);        // [lo, hi)
  double normal();                             // N(0, 1)
  double normal(double mu, double sigma);
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // [lo, hi]

  // Fisher-Yates; used for epoch shuffles and ensemble data orders.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Child rng seeded from this rng's seed (not its stream position).
  Rng child(const std::string& tag, std::uint64_t index = 0) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mbrl
