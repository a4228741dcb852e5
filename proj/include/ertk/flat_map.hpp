#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "ertk/rng.hpp"

namespace ertk {

// Open-addressed hash map with linear probing, used for all sparse
// vertex-indexed working state (push residuals, index rows, visit counts).
// Key is an unsigned integer; the all-ones key is reserved as the empty
// sentinel. No erase; zero-valued entries are dropped wholesale via
// drop_zeros() when a caller wants a compact map.
template <class Key, class Value>
class flat_map {
  static_assert(std::numeric_limits<Key>::is_integer && !std::numeric_limits<Key>::is_signed);

 public:
  static constexpr Key kEmpty = std::numeric_limits<Key>::max();

  flat_map() { rehash(8); }

  // reference valid until the next insertion
  Value& operator[](Key k) {
    size_t i = probe(k);
    if (keys_[i] == kEmpty) {
      if ((size_ + 1) * 10 > keys_.size() * 7) {
        rehash(keys_.size() * 2);
        i = probe(k);
      }
      keys_[i] = k;
      vals_[i] = Value{};
      ++size_;
    }
    return vals_[i];
  }

  Value get(Key k, Value dflt = Value{}) const {
    size_t i = probe(k);
    return keys_[i] == kEmpty ? dflt : vals_[i];
  }

  bool contains(Key k) const { return keys_[probe(k)] != kEmpty; }

  template <class F>
  void for_each(F&& f) const {
    for (size_t i = 0; i < keys_.size(); ++i)
      if (keys_[i] != kEmpty) f(keys_[i], vals_[i]);
  }

  std::vector<std::pair<Key, Value>> sorted_items() const {
    std::vector<std::pair<Key, Value>> out;
    out.reserve(size_);
    for_each([&](Key k, const Value& v) { out.emplace_back(k, v); });
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }

  void drop_zeros() {
    flat_map compact;
    compact.reserve(size_);
    for_each([&](Key k, const Value& v) {
      if (!(v == Value{})) compact[k] = v;
    });
    *this = std::move(compact);
  }

  void reserve(size_t n) {
    size_t cap = 8;
    while (cap * 7 < (n + 1) * 10) cap *= 2;
    if (cap > keys_.size()) rehash(cap);
  }

  size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  void clear() {
    std::fill(keys_.begin(), keys_.end(), kEmpty);
    size_ = 0;
  }

 private:
  size_t probe(Key k) const {
    size_t i = detail::mix64(static_cast<uint64_t>(k)) & mask_;
    while (keys_[i] != kEmpty && keys_[i] != k) i = (i + 1) & mask_;
    return i;
  }

  void rehash(size_t cap) {
    std::vector<Key> old_keys = std::move(keys_);
    std::vector<Value> old_vals = std::move(vals_);
    keys_.assign(cap, kEmpty);
    vals_.assign(cap, Value{});
    mask_ = cap - 1;
    for (size_t i = 0; i < old_keys.size(); ++i) {
      if (old_keys[i] == kEmpty) continue;
      size_t j = probe(old_keys[i]);
      keys_[j] = old_keys[i];
      vals_[j] = old_vals[i];
    }
  }

  std::vector<Key> keys_;
  std::vector<Value> vals_;
  size_t size_ = 0;
  size_t mask_ = 0;
};

}  // namespace ertk
