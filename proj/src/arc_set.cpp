#include "dvcover/arc_set.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "dvcover/errors.hpp"

namespace dvcover {

ArcSet ArcSet::full() {
  ArcSet s;
  s.arcs_.emplace(0.0, 1.0);
  s.measure_ = CompensatedSum(1.0);
  s.full_ = true;
  return s;
}

ArcSet ArcSet::single(double start, double length) {
  const Arc a{start, length};
  return from_arcs(std::span<const Arc>(&a, 1));
}

ArcSet ArcSet::from_arcs(std::span<const Arc> arcs) {
  std::vector<std::pair<double, double>> iv;
  iv.reserve(arcs.size() + 2);
  for (const Arc& a : arcs) {
    if (!std::isfinite(a.start) || !std::isfinite(a.length) || a.length < 0.0) {
      throw DomainError("ArcSet: arc length must be finite and nonnegative");
    }
    if (a.length >= 1.0) return full();
    const double s = wrap01(a.start);
    const double e = s + a.length;
    if (e > 1.0) {
      iv.emplace_back(s, 1.0);
      iv.emplace_back(0.0, e - 1.0);
    } else {
      iv.emplace_back(s, e);
    }
  }
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& p : iv) {
    if (!merged.empty() && p.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, p.second);
    } else {
      merged.push_back(p);
    }
  }
  if (merged.size() == 1 && merged[0].first == 0.0 && merged[0].second >= 1.0) return full();
  if (merged.size() > 1 && merged.front().first == 0.0 && merged.back().second >= 1.0) {
    merged.back().second = 1.0 + merged.front().second;
    merged.erase(merged.begin());
  }
  ArcSet out;
  for (const auto& p : merged) out.insert_piece(p.first, p.second);
  return out;
}

ArcSet ArcSet::from_points(std::span<const double> points) {
  std::vector<Arc> arcs;
  arcs.reserve(points.size());
  for (double x : points) arcs.push_back(Arc{x, 0.0});
  return from_arcs(arcs);
}

void ArcSet::insert_piece(double s, double e) {
  if (s >= 1.0) {
    s -= 1.0;
    e -= 1.0;
  }
  arcs_.emplace(s, e);
  measure_.add(e - s);
}

void ArcSet::cut(double lo, double hi) {
  auto it = arcs_.lower_bound(lo);
  if (it != arcs_.begin()) {
    auto p = std::prev(it);
    if (p->second > lo) it = p;
  }
  double rem[4];
  int nrem = 0;
  while (it != arcs_.end() && it->first < hi) {
    const double s = it->first;
    const double e = it->second;
    if (e == s) {
      if (s > lo) {
        it = arcs_.erase(it);
      } else {
        ++it;
      }
      continue;
    }
    if (e <= lo) {
      ++it;
      continue;
    }
    it = arcs_.erase(it);
    measure_.add(-(e - s));
    if (s < lo) {
      rem[nrem++] = s;
      rem[nrem++] = lo;
    }
    if (e > hi) {
      rem[nrem++] = hi;
      rem[nrem++] = e;
    }
  }
  for (int i = 0; i < nrem; i += 2) insert_piece(rem[i], rem[i + 1]);
}

void ArcSet::subtract(Arc open_arc) {
  if (!(open_arc.length > 0.0) || arcs_.empty()) return;
  const double a = wrap01(open_arc.start);
  const double len = std::min(open_arc.length, 1.0);
  if (full_) {
    full_ = false;
    arcs_.clear();
    measure_ = CompensatedSum();
    if (len < 1.0) insert_piece(a + len, a + 1.0);
    return;
  }
  const double b = a + len;
  cut(a, b);
  if (b > 1.0 && !arcs_.empty() && arcs_.begin()->first < b - 1.0) cut(a - 1.0, b - 1.0);
  if (!arcs_.empty() && arcs_.rbegin()->second > a + 1.0) cut(a + 1.0, b + 1.0);
}

ArcSet ArcSet::minus(Arc open_arc) const {
  ArcSet out = *this;
  out.subtract(open_arc);
  return out;
}

bool ArcSet::contains(double x) const {
  if (arcs_.empty()) return false;
  if (full_) return true;
  x = wrap01(x);
  auto it = arcs_.upper_bound(x);
  if (it != arcs_.begin() && x <= std::prev(it)->second) return true;
  const double last_end = arcs_.rbegin()->second;
  return last_end > 1.0 && x + 1.0 <= last_end;
}

double ArcSet::overlap_length(Arc arc) const {
  const double a = wrap01(arc.start);
  const double b = a + std::min(std::max(arc.length, 0.0), 1.0);
  CompensatedSum total;
  for (const auto& [s, e] : arcs_) {
    for (double k : {-1.0, 0.0, 1.0}) {
      const double lo = std::max(a, s + k);
      const double hi = std::min(b, e + k);
      if (hi > lo) total.add(hi - lo);
    }
  }
  return total.value();
}

double ArcSet::distance_to(double x) const {
  if (arcs_.empty()) throw DomainError("ArcSet::distance_to: empty set");
  if (contains(x)) return 0.0;
  x = wrap01(x);
  double best = 1.0;
  for (const auto& [s, e] : arcs_) {
    best = std::min(best, circle_dist(x, s));
    best = std::min(best, circle_dist(x, e));
  }
  return best;
}

std::vector<Arc> ArcSet::arcs() const {
  std::vector<Arc> out;
  out.reserve(arcs_.size());
  for (const auto& [s, e] : arcs_) out.push_back(Arc{s, e - s});
  return out;
}

double ArcSet::recomputed_measure() const {
  CompensatedSum total;
  for (const auto& [s, e] : arcs_) total.add(e - s);
  return total.value();
}

}  // namespace dvcover
