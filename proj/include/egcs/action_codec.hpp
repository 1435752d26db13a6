#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace egcs {

inline long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Index <-> elevator-subset mapping for the combinatorial head. Subsets of
/// size 1..max_subset are enumerated by size, then lexicographically:
/// {0},{1},...,{0,1},{0,2},...,{0,1,2},...
class ActionCodec {
 public:
  ActionCodec(int num_elevators, int max_subset) : n_(num_elevators), k_(max_subset) {
    if (n_ < 1 || n_ > 30) throw std::invalid_argument("codec supports 1..30 elevators");
    if (k_ < 1 || k_ > n_) throw std::invalid_argument("max_subset must lie in 1..num_elevators");
    for (int size = 1; size <= k_; ++size) {
      std::vector<int> comb(static_cast<std::size_t>(size));
      for (int i = 0; i < size; ++i) comb[static_cast<std::size_t>(i)] = i;
      while (true) {
        index_.emplace(mask_of(comb), static_cast<int>(subsets_.size()));
        subsets_.push_back(comb);
        int i = size - 1;
        while (i >= 0 && comb[static_cast<std::size_t>(i)] == n_ - size + i) --i;
        if (i < 0) break;
        ++comb[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < size; ++j) comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }

  int num_elevators() const { return n_; }
  int max_subset() const { return k_; }
  int size() const { return static_cast<int>(subsets_.size()); }

  int encode(std::span<const int> subset) const {
    if (subset.empty()) throw std::invalid_argument("the combinatorial head cannot send zero elevators");
    std::vector<int> s(subset.begin(), subset.end());
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw std::invalid_argument("duplicate elevator in subset");
    if (static_cast<int>(s.size()) > k_) throw std::invalid_argument("subset larger than max_subset");
    for (int e : s)
      if (e < 0 || e >= n_) throw std::invalid_argument("elevator id out of range: " + std::to_string(e));
    return index_.at(mask_of(s));
  }

  const std::vector<int>& decode(int index) const {
    if (index < 0 || index >= size()) throw std::out_of_range("action index out of range: " + std::to_string(index));
    return subsets_[static_cast<std::size_t>(index)];
  }

  static unsigned mask_of(std::span<const int> subset) {
    unsigned m = 0;
    for (int e : subset) m |= 1u << e;
    return m;
  }

 private:
  int n_;
  int k_;
  std::vector<std::vector<int>> subsets_;
  std::unordered_map<unsigned, int> index_;
};

/// Branching head: bit e of the mask means elevator e responds.
inline std::vector<int> subset_from_mask(unsigned mask, int num_elevators) {
  std::vector<int> out;
  for (int e = 0; e < num_elevators; ++e)
    if (mask & (1u << e)) out.push_back(e);
  return out;
}

}  // namespace egcs
