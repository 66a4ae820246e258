#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "dvcover/circle.hpp"
#include "dvcover/numerics.hpp"

namespace dvcover {

/// Finite union of closed, pairwise disjoint arcs of the circle.
///
/// Arcs are keyed by start in [0,1); at most the last arc wraps past 1.
/// Degenerate point-arcs are allowed. Subtraction removes open intervals,
/// so remnants are closed; a remnant that would be a single new point is
/// dropped.
class ArcSet {
 public:
  ArcSet() = default;

  static ArcSet full();
  static ArcSet from_arcs(std::span<const Arc> arcs);
  static ArcSet from_points(std::span<const double> points);
  static ArcSet single(double start, double length);

  /// Remove the open arc (start, start + length).
  void subtract(Arc open_arc);
  [[nodiscard]] ArcSet minus(Arc open_arc) const;

  [[nodiscard]] double measure() const { return measure_.value(); }
  [[nodiscard]] bool empty() const { return arcs_.empty(); }
  [[nodiscard]] bool is_full() const { return full_; }
  [[nodiscard]] std::size_t size() const { return arcs_.size(); }
  [[nodiscard]] bool contains(double x) const;
  [[nodiscard]] double overlap_length(Arc arc) const;
  [[nodiscard]] double distance_to(double x) const;
  [[nodiscard]] std::vector<Arc> arcs() const;
  [[nodiscard]] double recomputed_measure() const;

  friend bool operator==(const ArcSet& a, const ArcSet& b) {
    return a.full_ == b.full_ && a.arcs_ == b.arcs_;
  }

 private:
  void cut(double lo, double hi);
  void insert_piece(double s, double e);

  std::map<double, double> arcs_;  // start -> end, end in [start, start + 1]
  CompensatedSum measure_;
  bool full_ = false;
};

}  // namespace dvcover
