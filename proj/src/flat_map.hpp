#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace autocurriculum::detail {

// Open-addressing map from 64-bit keys; the all-ones key is reserved.
template <typename V>
class FlatMap {
 public:
  static constexpr std::uint64_t kEmpty = ~0ULL;

  explicit FlatMap(std::size_t capacity_hint = 16) { rehash(grow_to(capacity_hint)); }

  std::size_t size() const { return size_; }

  // Returns the slot value and whether it was inserted.
  std::pair<V*, bool> try_emplace(std::uint64_t key, const V& value = V{}) {
    if ((size_ + 1) * 4 > keys_.size() * 3) rehash(keys_.size() * 2);
    std::size_t i = slot(key);
    if (keys_[i] == key) return {&values_[i], false};
    keys_[i] = key;
    values_[i] = value;
    ++size_;
    return {&values_[i], true};
  }

  const V* find(std::uint64_t key) const {
    std::size_t i = slot(key);
    return keys_[i] == key ? &values_[i] : nullptr;
  }

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < keys_.size(); ++i)
      if (keys_[i] != kEmpty) f(keys_[i], values_[i]);
  }

 private:
  static std::size_t grow_to(std::size_t n) {
    std::size_t c = 16;
    while (c * 3 < n * 4) c *= 2;
    return c;
  }

  static std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    return x;
  }

  std::size_t slot(std::uint64_t key) const {
    const std::size_t mask = keys_.size() - 1;
    std::size_t i = mix(key) & mask;
    while (keys_[i] != kEmpty && keys_[i] != key) i = (i + 1) & mask;
    return i;
  }

  void rehash(std::size_t capacity) {
    std::vector<std::uint64_t> old_keys(capacity, kEmpty);
    std::vector<V> old_values(capacity);
    old_keys.swap(keys_);
    old_values.swap(values_);
    for (std::size_t i = 0; i < old_keys.size(); ++i)
      if (old_keys[i] != kEmpty) {
        std::size_t j = slot(old_keys[i]);
        keys_[j] = old_keys[i];
        values_[j] = std::move(old_values[i]);
      }
  }

  std::vector<std::uint64_t> keys_;
  std::vector<V> values_;
  std::size_t size_ = 0;
};

}  // namespace autocurriculum::detail
