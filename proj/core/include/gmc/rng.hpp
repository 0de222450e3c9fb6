#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gmc {

// Counter-style seed derivation: a replica's stream is a pure function of
// (master seed, replica index, stream label), so the order in which workers
// pick up replicas never changes what a replica sees.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t label_hash(std::string_view label);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replica, std::string_view label);

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t master, std::uint64_t replica, std::string_view label) {
  return Engine(derive_seed(master, replica, label));
}

// Standard normal sampler bound to one engine.
class NormalStream {
 public:
  explicit NormalStream(Engine engine) : engine_(std::move(engine)) {}
  NormalStream(std::uint64_t master, std::uint64_t replica, std::string_view label)
      : engine_(make_engine(master, replica, label)) {}

  double operator()() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  Engine& engine() { return engine_; }

 private:
  Engine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace gmc
