#include "liodom/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace liodom {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.squared_distance < b.squared_distance ||
         (a.squared_distance == b.squared_distance && a.index < b.index);
}

}  // namespace

KdIndex::KdIndex(std::span<const Vec3> points)
    : points_(points.begin(), points.end()) {
  if (points_.empty()) throw std::invalid_argument("KdIndex: empty point set");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  axis_.assign(points_.size(), 0);
  build(0, points_.size());
}

void KdIndex::build(std::size_t lo, std::size_t hi) {
  if (hi - lo <= 1) return;
  Vec3 mn = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 mx = -mn;
  for (std::size_t i = lo; i < hi; ++i) {
    mn = mn.cwiseMin(points_[order_[i]]);
    mx = mx.cwiseMax(points_[order_[i]]);
  }
  Eigen::Index axis = 0;
  (mx - mn).maxCoeff(&axis);
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                   [&](std::size_t a, std::size_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  axis_[mid] = static_cast<unsigned char>(axis);
  build(lo, mid);
  build(mid + 1, hi);
}

Neighbor KdIndex::nearest(const Vec3& query) const {
  Neighbor best{0, std::numeric_limits<double>::infinity()};
  search_nearest(0, points_.size(), query, best);
  return best;
}

void KdIndex::search_nearest(std::size_t lo, std::size_t hi, const Vec3& q,
                             Neighbor& best) const {
  if (lo >= hi) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  const std::size_t idx = order_[mid];
  const Neighbor cand{idx, (points_[idx] - q).squaredNorm()};
  if (closer(cand, best)) best = cand;
  if (hi - lo == 1) return;

  const int axis = axis_[mid];
  const double diff = q[axis] - points_[idx][axis];
  const bool left_first = diff < 0.0;
  if (left_first) {
    search_nearest(lo, mid, q, best);
    if (diff * diff <= best.squared_distance) search_nearest(mid + 1, hi, q, best);
  } else {
    search_nearest(mid + 1, hi, q, best);
    if (diff * diff <= best.squared_distance) search_nearest(lo, mid, q, best);
  }
}

std::vector<Neighbor> KdIndex::knn(const Vec3& query, std::size_t k) const {
  std::vector<Neighbor> heap;
  if (k == 0) return heap;
  heap.reserve(k + 1);
  search_knn(0, points_.size(), query, k, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

void KdIndex::search_knn(std::size_t lo, std::size_t hi, const Vec3& q,
                         std::size_t k, std::vector<Neighbor>& heap) const {
  if (lo >= hi) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  const std::size_t idx = order_[mid];
  const Neighbor cand{idx, (points_[idx] - q).squaredNorm()};
  if (heap.size() < k) {
    heap.push_back(cand);
    std::push_heap(heap.begin(), heap.end(), closer);
  } else if (closer(cand, heap.front())) {
    std::pop_heap(heap.begin(), heap.end(), closer);
    heap.back() = cand;
    std::push_heap(heap.begin(), heap.end(), closer);
  }
  if (hi - lo == 1) return;

  const int axis = axis_[mid];
  const double diff = q[axis] - points_[idx][axis];
  auto bound = [&] {
    return heap.size() < k ? std::numeric_limits<double>::infinity()
                           : heap.front().squared_distance;
  };
  if (diff < 0.0) {
    search_knn(lo, mid, q, k, heap);
    if (diff * diff <= bound()) search_knn(mid + 1, hi, q, k, heap);
  } else {
    search_knn(mid + 1, hi, q, k, heap);
    if (diff * diff <= bound()) search_knn(lo, mid, q, k, heap);
  }
}

}  // namespace liodom
