#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ped {

/// Exact nearest-neighbour index over a fixed point set that supports
/// deletion. Low-dimensional sets use a kd-tree with per-node live counts,
/// rebuilt over the live points whenever half of them have been removed.
/// Sets below `brute_force_limit` points, or whose tree would be too shallow
/// to split every dimension once, are scanned linearly over a compacted copy
/// of the live points. Distance ties resolve to the lower point index.
class PointIndex {
 public:
  static constexpr std::size_t brute_force_limit = 256;

  /// `coords` is row-major, `dim` values per point.
  PointIndex(std::vector<double> coords, std::size_t dim);

  std::size_t size() const { return alive_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t alive_count() const { return alive_count_; }
  bool alive(std::size_t i) const { return alive_[i] != 0; }
  bool uses_tree() const { return !scan_; }
  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }

  void remove(std::size_t i);

  /// Nearest live point to `query`; size() when none is alive.
  std::size_t nearest(std::span<const double> query) const;
  /// Up to k live points ordered by (distance, index).
  std::vector<std::size_t> nearest_k(std::span<const double> query, std::size_t k) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t alive = 0;
  };
  struct Best;

  int build(std::uint32_t begin, std::uint32_t end, int parent);
  void rebuild();
  double box_distance(int node, std::span<const double> query) const;
  void search(int node, std::span<const double> query, Best& best) const;
  double distance2(const double* p, std::span<const double> query) const;
  /// Squared distance, or any value above `bound` once the partial sum exceeds it.
  double distance2_bounded(const double* p, std::span<const double> query, double bound) const;

  std::vector<double> coords_;
  std::size_t dim_;
  std::vector<std::uint8_t> alive_;
  std::size_t alive_count_ = 0;
  bool scan_ = false;

  // Scan mode: live points packed densely; slot_[i] is point i's position.
  std::vector<double> packed_;
  std::vector<std::uint32_t> packed_id_;
  std::vector<std::uint32_t> slot_;

  // Tree mode.
  std::size_t built_count_ = 0;  // live points when the tree was last built
  std::vector<Node> nodes_;
  std::vector<double> box_lo_;
  std::vector<double> box_hi_;
  std::vector<std::uint32_t> perm_;
  std::vector<std::int32_t> leaf_of_point_;
  std::vector<std::int32_t> parent_;
};

}  // namespace ped
