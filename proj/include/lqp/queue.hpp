#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "lqp/feature.hpp"

namespace lqp {

// Bounded FIFO of labeled samples. Pushing past capacity evicts the oldest
// entry; no capacity means the queue never evicts.
class TrainingQueue {
  public:
    explicit TrainingQueue(std::optional<std::size_t> capacity) : capacity_(capacity) {}

    void push(LabeledSample sample) {
        entries_.push_back(std::move(sample));
        if (capacity_ && entries_.size() > *capacity_) entries_.pop_front();
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::optional<std::size_t> capacity() const { return capacity_; }

    const LabeledSample& at(std::size_t i) const { return entries_[i]; }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    // Copy for training; features are shared immutably, so this is cheap.
    std::vector<LabeledSample> snapshot() const { return {entries_.begin(), entries_.end()}; }

  private:
    std::optional<std::size_t> capacity_;
    std::deque<LabeledSample> entries_;
};

}  // namespace lqp
