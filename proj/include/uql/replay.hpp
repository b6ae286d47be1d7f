#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "uql/mdp.hpp"

namespace uql {

// Fixed-capacity FIFO transition store; push evicts the oldest entry once
// full. sample() draws uniformly over the current contents.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
  }

  void push(const Transition& t) {
    if (data_.size() < capacity_) {
      data_.push_back(t);
    } else {
      data_[head_] = t;
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }

  // Insertion order, oldest first.
  const Transition& at(std::size_t i) const {
    if (i >= data_.size()) throw std::out_of_range("ReplayBuffer::at");
    if (data_.size() < capacity_) return data_[i];
    return data_[(head_ + i) % capacity_];
  }

  const Transition& sample(Rng& rng) const {
    if (data_.empty()) throw std::runtime_error("ReplayBuffer::sample: empty");
    return data_[rng.uniform_int(data_.size())];
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> data_;
};

}  // namespace uql
