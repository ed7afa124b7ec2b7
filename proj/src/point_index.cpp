#include "pedsub/point_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pedsub/errors.hpp"

namespace ped {
namespace {

constexpr std::uint32_t kLeafSize = 16;

}  // namespace

/// Bounded max-heap of (squared distance, index) keeping the k smallest.
struct PointIndex::Best {
  std::size_t k;
  std::vector<std::pair<double, std::size_t>> heap;

  bool full() const { return heap.size() >= k; }
  double worst() const { return full() ? heap.front().first : std::numeric_limits<double>::infinity(); }
  void offer(double d, std::size_t i) {
    const std::pair<double, std::size_t> item{d, i};
    if (!full()) {
      heap.push_back(item);
      std::push_heap(heap.begin(), heap.end());
    } else if (item < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = item;
      std::push_heap(heap.begin(), heap.end());
    }
  }
};

PointIndex::PointIndex(std::vector<double> coords, std::size_t dim)
    : coords_(std::move(coords)), dim_(dim) {
  if (dim_ == 0 || coords_.size() % dim_ != 0) throw InvalidArgument("point coordinates do not match the dimension");
  const std::size_t n = coords_.size() / dim_;
  if (n > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("too many points");
  alive_.assign(n, 1);
  alive_count_ = n;
  // A tree of depth log2(n / leaf) leaves some dimensions unsplit when it is
  // shallower than dim, and pruning then rarely skips a leaf.
  scan_ = n < brute_force_limit || std::log2(static_cast<double>(n) / kLeafSize) < static_cast<double>(dim_);
  if (scan_) {
    packed_ = coords_;
    packed_id_.resize(n);
    std::iota(packed_id_.begin(), packed_id_.end(), 0u);
    slot_ = packed_id_;
    return;
  }
  rebuild();
}

void PointIndex::rebuild() {
  nodes_.clear();
  parent_.clear();
  perm_.clear();
  for (std::size_t i = 0; i < alive_.size(); ++i)
    if (alive_[i]) perm_.push_back(static_cast<std::uint32_t>(i));
  leaf_of_point_.assign(alive_.size(), -1);
  built_count_ = perm_.size();
  if (!perm_.empty()) build(0, static_cast<std::uint32_t>(perm_.size()), -1);
}

int PointIndex::build(std::uint32_t begin, std::uint32_t end, int parent) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end, -1, -1, end - begin});
  parent_.push_back(parent);
  box_lo_.resize(nodes_.size() * dim_);
  box_hi_.resize(nodes_.size() * dim_);
  double* lo = box_lo_.data() + static_cast<std::size_t>(id) * dim_;
  double* hi = box_hi_.data() + static_cast<std::size_t>(id) * dim_;
  std::fill(lo, lo + dim_, std::numeric_limits<double>::infinity());
  std::fill(hi, hi + dim_, -std::numeric_limits<double>::infinity());
  for (std::uint32_t i = begin; i < end; ++i) {
    const double* p = coords_.data() + static_cast<std::size_t>(perm_[i]) * dim_;
    for (std::size_t d = 0; d < dim_; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }
  std::size_t split = 0;
  double spread = -1.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    if (hi[d] - lo[d] > spread) {
      spread = hi[d] - lo[d];
      split = d;
    }
  }
  if (end - begin <= kLeafSize || spread <= 0.0) {
    for (std::uint32_t i = begin; i < end; ++i) leaf_of_point_[perm_[i]] = id;
    return id;
  }
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double va = coords_[a * dim_ + split], vb = coords_[b * dim_ + split];
                     return va != vb ? va < vb : a < b;
                   });
  const int left = build(begin, mid, id);
  const int right = build(mid, end, id);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void PointIndex::remove(std::size_t i) {
  if (!alive_[i]) return;
  alive_[i] = 0;
  --alive_count_;
  if (scan_) {
    const std::uint32_t at = slot_[i], last = static_cast<std::uint32_t>(packed_id_.size() - 1);
    if (at != last) {
      std::copy_n(packed_.data() + static_cast<std::size_t>(last) * dim_, dim_,
                  packed_.data() + static_cast<std::size_t>(at) * dim_);
      packed_id_[at] = packed_id_[last];
      slot_[packed_id_[at]] = at;
    }
    packed_id_.pop_back();
    packed_.resize(packed_id_.size() * dim_);
    return;
  }
  if (alive_count_ > 0 && 2 * alive_count_ <= built_count_) {
    rebuild();
    return;
  }
  for (int node = leaf_of_point_[i]; node >= 0; node = parent_[static_cast<std::size_t>(node)])
    --nodes_[static_cast<std::size_t>(node)].alive;
}

double PointIndex::distance2(const double* p, std::span<const double> query) const {
  double s = 0.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    const double diff = p[d] - query[d];
    s += diff * diff;
  }
  return s;
}

double PointIndex::distance2_bounded(const double* p, std::span<const double> query, double bound) const {
  double s = 0.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    const double diff = p[d] - query[d];
    s += diff * diff;
    if (s > bound) return s;
  }
  return s;
}

double PointIndex::box_distance(int node, std::span<const double> query) const {
  const double* lo = box_lo_.data() + static_cast<std::size_t>(node) * dim_;
  const double* hi = box_hi_.data() + static_cast<std::size_t>(node) * dim_;
  double s = 0.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    double diff = 0.0;
    if (query[d] < lo[d]) diff = lo[d] - query[d];
    else if (query[d] > hi[d]) diff = query[d] - hi[d];
    s += diff * diff;
  }
  return s;
}

void PointIndex::search(int node, std::span<const double> query, Best& best) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.alive == 0) return;
  if (n.left < 0) {
    for (std::uint32_t i = n.begin; i < n.end; ++i) {
      const std::uint32_t pt = perm_[i];
      if (alive_[pt]) best.offer(distance2_bounded(coords_.data() + static_cast<std::size_t>(pt) * dim_, query, best.worst()), pt);
    }
    return;
  }
  const double dl = box_distance(n.left, query);
  const double dr = box_distance(n.right, query);
  const int first = dl <= dr ? n.left : n.right;
  const int second = dl <= dr ? n.right : n.left;
  const double d_first = std::min(dl, dr), d_second = std::max(dl, dr);
  // Equal-distance boxes are still visited so index tie-breaking stays exact.
  if (d_first <= best.worst()) search(first, query, best);
  if (d_second <= best.worst()) search(second, query, best);
}

std::vector<std::size_t> PointIndex::nearest_k(std::span<const double> query, std::size_t k) const {
  if (query.size() != dim_) throw InvalidArgument("query dimension mismatch");
  Best best{k, {}};
  if (k == 0 || alive_count_ == 0) return {};
  if (scan_) {
    const double* p = packed_.data();
    for (std::size_t j = 0; j < packed_id_.size(); ++j, p += dim_)
      best.offer(distance2(p, query), packed_id_[j]);
  } else {
    search(0, query, best);
  }
  std::sort(best.heap.begin(), best.heap.end());
  std::vector<std::size_t> out;
  out.reserve(best.heap.size());
  for (const auto& [d, i] : best.heap) out.push_back(i);
  return out;
}

std::size_t PointIndex::nearest(std::span<const double> query) const {
  const auto r = nearest_k(query, 1);
  return r.empty() ? size() : r.front();
}

}  // namespace ped
