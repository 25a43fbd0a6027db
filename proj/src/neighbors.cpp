#include "pfad/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "pfad/errors.hpp"

namespace pfad {

namespace {

constexpr int kLeafSize = 16;

}  // namespace

NeighborIndex::NeighborIndex(Eigen::MatrixXd points) : points_(std::move(points)) {
  dim_ = static_cast<int>(points_.cols());
  const int n = static_cast<int>(points_.rows());
  order_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order_[static_cast<std::size_t>(i)] = i;
  if (n > 0) build(0, n);
  rows_.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(dim_));
  for (int p = 0; p < n; ++p)
    for (int c = 0; c < dim_; ++c)
      rows_[static_cast<std::size_t>(p) * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(c)] =
          points_(order_[static_cast<std::size_t>(p)], c);
}

int NeighborIndex::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1});
  const auto d = static_cast<std::size_t>(dim_);
  lo_.resize(lo_.size() + d);
  hi_.resize(hi_.size() + d);
  int widest = 0;
  double spread = 0;
  for (int c = 0; c < dim_; ++c) {
    double lo = points_(order_[static_cast<std::size_t>(begin)], c), hi = lo;
    for (int i = begin + 1; i < end; ++i) {
      const double v = points_(order_[static_cast<std::size_t>(i)], c);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    lo_[static_cast<std::size_t>(id) * d + static_cast<std::size_t>(c)] = lo;
    hi_[static_cast<std::size_t>(id) * d + static_cast<std::size_t>(c)] = hi;
    if (hi - lo > spread) {
      spread = hi - lo;
      widest = c;
    }
  }
  if (end - begin <= kLeafSize || !(spread > 0)) return id;

  const int mid = begin + (end - begin) / 2;
  auto first = order_.begin() + begin;
  std::nth_element(first, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
    const double va = points_(a, widest), vb = points_(b, widest);
    return va < vb || (va == vb && a < b);
  });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

// Per-query state: bounded max-heap on (squared distance, index).
struct NeighborIndex::Search {
  const NeighborIndex& tree;
  const double* q;
  int self;
  std::size_t k;
  std::vector<std::pair<double, int>> heap;

  double box_bound(int node) const {
    const auto d = static_cast<std::size_t>(tree.dim_);
    const double* lo = tree.lo_.data() + static_cast<std::size_t>(node) * d;
    const double* hi = tree.hi_.data() + static_cast<std::size_t>(node) * d;
    double s = 0;
    for (std::size_t c = 0; c < d; ++c) {
      const double g = q[c] < lo[c] ? lo[c] - q[c] : q[c] > hi[c] ? q[c] - hi[c] : 0.0;
      s += g * g;
    }
    return s;
  }

  // A box can be skipped only if nothing inside could displace the current
  // k-th candidate; equal bounds are still visited for the index tie-break.
  bool prunable(double bound) const { return heap.size() == k && bound > heap.front().first; }

  void offer(double d2, int j) {
    const std::pair<double, int> c{d2, j};
    if (heap.size() < k) {
      heap.push_back(c);
      std::push_heap(heap.begin(), heap.end());
    } else if (c < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = c;
      std::push_heap(heap.begin(), heap.end());
    }
  }

  void visit(int node, double bound) {
    if (prunable(bound)) return;
    const Node& nd = tree.nodes_[static_cast<std::size_t>(node)];
    if (nd.left < 0) {
      const auto d = static_cast<std::size_t>(tree.dim_);
      for (int p = nd.begin; p < nd.end; ++p) {
        const int j = tree.order_[static_cast<std::size_t>(p)];
        if (j == self) continue;
        const double* x = tree.rows_.data() + static_cast<std::size_t>(p) * d;
        double s = 0;
        for (std::size_t c = 0; c < d; ++c) {
          const double g = x[c] - q[c];
          s += g * g;
        }
        offer(s, j);
      }
      return;
    }
    const double bl = box_bound(nd.left), br = box_bound(nd.right);
    if (bl <= br) {
      visit(nd.left, bl);
      visit(nd.right, br);
    } else {
      visit(nd.right, br);
      visit(nd.left, bl);
    }
  }
};

Neighbors NeighborIndex::query(const Eigen::MatrixXd& queries, int k) const {
  return search(queries, k, false);
}

Neighbors NeighborIndex::query_self(int k) const { return search(points_, k, true); }

Neighbors NeighborIndex::search(const Eigen::MatrixXd& Q, int k, bool exclude_self) const {
  const Eigen::Index n = points_.rows();
  const Eigen::Index available = exclude_self ? n - 1 : n;
  if (k < 1 || k > available)
    throw FitError("k = " + std::to_string(k) + " neighbours requested from " + std::to_string(available) + " points");
  if (Q.cols() != points_.cols()) throw SchemaError("query dimension does not match the reference points");

  Neighbors out;
  out.index.resize(Q.rows(), k);
  out.distance.resize(Q.rows(), k);
  Search s{*this, nullptr, -1, static_cast<std::size_t>(k), {}};
  s.heap.reserve(static_cast<std::size_t>(k));
  std::vector<double> q(static_cast<std::size_t>(dim_));
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    for (int c = 0; c < dim_; ++c) q[static_cast<std::size_t>(c)] = Q(i, c);
    s.q = q.data();
    s.self = exclude_self ? static_cast<int>(i) : -1;
    s.heap.clear();
    s.visit(0, s.box_bound(0));
    std::sort_heap(s.heap.begin(), s.heap.end());
    for (int c = 0; c < k; ++c) {
      out.index(i, c) = s.heap[static_cast<std::size_t>(c)].second;
      out.distance(i, c) = std::sqrt(s.heap[static_cast<std::size_t>(c)].first);
    }
  }
  return out;
}

}  // namespace pfad
