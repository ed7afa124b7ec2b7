#include "pedsub/seed.hpp"

namespace ped {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Seed derive_subseed(Seed seed, std::string_view stream_label, std::uint64_t index) {
  std::uint64_t h = splitmix64(seed.master ^ splitmix64(fnv1a(stream_label)));
  h = splitmix64(h ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  return Seed{h};
}

}  // namespace ped
