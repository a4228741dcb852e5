#pragma once

#include <cstdint>

namespace ertk {

namespace detail {

// stateless 64-bit finalizer (splitmix64 mixing function)
constexpr uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Small counter-based generator (splitmix64). A parent generator hands out
// independent child streams via derive(), so walk j of a batch can be given
// stream j and produce the same sequence no matter which worker runs it or
// in what order. No global state, no environment entropy.
class WalkRng {
 public:
  explicit WalkRng(uint64_t seed) : state_(seed) {}

  // child stream keyed by (current state, id); does not advance this generator
  WalkRng derive(uint64_t id) const {
    uint64_t z = detail::mix64(state_ ^ 0x2545f4914f6cdd1dULL);
    return WalkRng(z ^ detail::mix64(id + 0x9e3779b97f4a7c15ULL));
  }

  WalkRng derive(uint64_t a, uint64_t b) const { return derive(a).derive(b); }

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(state_);
  }

  // uniform in [0, bound); bound > 0
  uint32_t next_below(uint32_t bound) {
    return static_cast<uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  // uniform in [0, 1)
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool next_coin() { return next_u64() >> 63; }

 private:
  uint64_t state_;
};

}  // namespace ertk
