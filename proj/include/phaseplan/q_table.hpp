#pragma once

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace phaseplan {

// Sparse action-value store keyed by (column, row, target row). Absent keys
// read as 0. Storage is one dense block of target rows per (column, row)
// state, which keeps argmax scans over an action range cache-friendly.
class QTable {
 public:
  struct Entry {
    std::size_t col;
    int row;
    int action;
    double value;
    auto operator<=>(const Entry&) const = default;
  };

  // Read-only view of one state's actions; one hash lookup per state.
  struct StateView {
    int base = 0;
    int count = 0;
    const double* q = nullptr;
    const std::uint8_t* seen = nullptr;

    double at(int action) const {
      const int i = action - base;
      return i >= 0 && i < count ? q[i] : 0.0;
    }
    bool visited(int action) const {
      const int i = action - base;
      return i >= 0 && i < count && seen[i] != 0;
    }
  };

  StateView view(std::size_t col, int row) const {
    const Block* b = find(col, row);
    if (!b) return {};
    return {b->base, static_cast<int>(b->q.size()), b->q.data(), b->visited.data()};
  }

  double get(std::size_t col, int row, int action) const {
    const Block* b = find(col, row);
    if (!b || action < b->base || action >= b->base + static_cast<int>(b->q.size())) return 0.0;
    return b->q[action - b->base];
  }

  void set(std::size_t col, int row, int action, double value) {
    Block& b = block(col, row);
    b.ensure(action);
    b.q[action - b.base] = value;
    b.stored[action - b.base] = 1;
  }

  bool visited(std::size_t col, int row, int action) const {
    const Block* b = find(col, row);
    if (!b || action < b->base || action >= b->base + static_cast<int>(b->q.size())) return false;
    return b->visited[action - b->base] != 0;
  }

  void mark_visited(std::size_t col, int row, int action) {
    Block& b = block(col, row);
    b.ensure(action);
    b.visited[action - b.base] = 1;
  }

  // Number of explicitly written values.
  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [key, b] : blocks_) n += static_cast<std::size_t>(std::count(b.stored.begin(), b.stored.end(), 1));
    return n;
  }

  // All written values in (col, row, action) order.
  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    for (const auto& [key, b] : blocks_)
      for (std::size_t i = 0; i < b.q.size(); ++i)
        if (b.stored[i]) out.push_back({key >> 32, static_cast<int>(key & 0xffffffffu), b.base + static_cast<int>(i), b.q[i]});
    std::sort(out.begin(), out.end());
    return out;
  }

  bool operator==(const QTable& other) const { return entries() == other.entries(); }

 private:
  struct Block {
    int base = 0;
    std::vector<double> q;
    std::vector<std::uint8_t> stored;
    std::vector<std::uint8_t> visited;

    void ensure(int action) {
      if (q.empty()) {
        base = action;
        q.assign(1, 0.0);
        stored.assign(1, 0);
        visited.assign(1, 0);
        return;
      }
      if (action < base) {
        const auto grow = static_cast<std::size_t>(base - action);
        q.insert(q.begin(), grow, 0.0);
        stored.insert(stored.begin(), grow, 0);
        visited.insert(visited.begin(), grow, 0);
        base = action;
      } else if (action >= base + static_cast<int>(q.size())) {
        const auto size = static_cast<std::size_t>(action - base + 1);
        q.resize(size, 0.0);
        stored.resize(size, 0);
        visited.resize(size, 0);
      }
    }
  };

  static std::uint64_t key(std::size_t col, int row) {
    return (static_cast<std::uint64_t>(col) << 32) | static_cast<std::uint32_t>(row);
  }

  const Block* find(std::size_t col, int row) const {
    auto it = blocks_.find(key(col, row));
    return it == blocks_.end() ? nullptr : &it->second;
  }

  Block& block(std::size_t col, int row) { return blocks_[key(col, row)]; }

  std::unordered_map<std::uint64_t, Block> blocks_;
};

}  // namespace phaseplan
