#pragma once

#include <algorithm>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include "egcs/rng.hpp"

namespace egcs {

/// Fixed-capacity FIFO ring. Once full, each push overwrites the oldest entry.
template <class T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    data_.reserve(capacity);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return data_.size(); }
  bool full() const { return data_.size() == capacity_; }

  void push(T item) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(item));
    } else {
      data_[head_] = std::move(item);
    }
    head_ = (head_ + 1) % capacity_;
  }

  /// Storage slot i (not insertion order once the ring wrapped).
  const T& operator[](std::size_t i) const { return data_.at(i); }

  /// Entries in insertion order, oldest first.
  std::vector<T> ordered() const {
    std::vector<T> out;
    const std::size_t start = full() ? head_ : 0;
    for (std::size_t i = 0; i < data_.size(); ++i) out.push_back(data_[(start + i) % data_.size()]);
    return out;
  }

  /// n distinct slots, uniformly at random (Floyd's algorithm).
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
    const std::size_t N = data_.size();
    if (n > N) throw std::invalid_argument("cannot sample more entries than stored");
    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    for (std::size_t j = N - n; j < N; ++j) {
      const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
      if (std::find(chosen.begin(), chosen.end(), t) == chosen.end())
        chosen.push_back(t);
      else
        chosen.push_back(j);
    }
    return chosen;
  }

  void clear() {
    data_.clear();
    head_ = 0;
  }

  // checkpoint helpers
  const std::vector<T>& raw() const { return data_; }
  std::size_t head() const { return head_; }
  void restore(std::vector<T> data, std::size_t head) {
    if (data.size() > capacity_ || (data.size() > 0 && head >= capacity_)) throw std::invalid_argument("bad replay state");
    data_ = std::move(data);
    head_ = head;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<T> data_;
};

}  // namespace egcs
