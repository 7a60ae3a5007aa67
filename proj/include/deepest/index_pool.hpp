#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace deepest {

/// The unselected indices of a population, addressable by rank in population
/// order. Backed by a Fenwick tree of 0/1 counts: remove() and nth() are O(log N).
class IndexPool {
 public:
  explicit IndexPool(std::size_t size) : size_(size), remaining_(size), tree_(size + 1, 0) {
    for (std::size_t i = 1; i <= size_; ++i) {
      tree_[i] += 1;
      const std::size_t parent = i + (i & (~i + 1));
      if (parent <= size_) tree_[parent] += tree_[i];
    }
    for (std::size_t step = 1; step <= size_; step <<= 1) top_ = step;
  }

  std::size_t size() const { return size_; }
  std::size_t remaining() const { return remaining_; }
  bool contains(std::size_t index) const { return count_upto(index + 1) - count_upto(index) == 1; }

  /// Marks `index` as selected. Precondition: contains(index).
  void remove(std::size_t index) {
    for (std::size_t i = index + 1; i <= size_; i += i & (~i + 1)) tree_[i] -= 1;
    --remaining_;
  }

  /// Population index of the rank-th (0-based) unselected element.
  /// Precondition: rank < remaining().
  std::size_t nth(std::size_t rank) const {
    std::size_t pos = 0;
    std::uint32_t left = static_cast<std::uint32_t>(rank);
    for (std::size_t step = top_; step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next <= size_ && tree_[next] <= left) {
        pos = next;
        left -= tree_[next];
      }
    }
    return pos;  // one past the last full prefix, i.e. the 0-based index
  }

 private:
  // Number of unselected elements among indices [0, end).
  std::uint32_t count_upto(std::size_t end) const {
    std::uint32_t c = 0;
    for (std::size_t i = end; i > 0; i -= i & (~i + 1)) c += tree_[i];
    return c;
  }

  std::size_t size_;
  std::size_t remaining_;
  std::size_t top_ = 0;
  std::vector<std::uint32_t> tree_;
};

}  // namespace deepest
