#include "gmc/rng.hpp"

namespace gmc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t label_hash(std::string_view label) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replica, std::string_view label) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ label_hash(label));
  s = splitmix64(s ^ (replica * 0xd1342543de82ef95ULL + 1));
  return s;
}

}  // namespace gmc
