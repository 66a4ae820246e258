#include "dvcover/sequences.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dvcover/errors.hpp"
#include "dvcover/numerics.hpp"

namespace dvcover {

namespace {

constexpr std::uint64_t kLogHarmonicStart = 16;
constexpr double kExactLogLimit = 42.0;        // e^42 < 2^62
constexpr std::uint64_t kDirectLimit = 10'000'000;  // direct summation budget for schedules
constexpr double kLogRangeLimit = 1e300;

double log_harmonic_formula(double n) { return 2.0 / n - 4.0 / (n * std::log(n)); }

double log_harmonic_value(std::uint64_t n) {
  static const double l16 = log_harmonic_formula(static_cast<double>(kLogHarmonicStart));
  if (n >= kLogHarmonicStart) return log_harmonic_formula(static_cast<double>(n));
  const double frac = static_cast<double>(n - 1) / static_cast<double>(kLogHarmonicStart - 1);
  return kLengthCap * std::pow(l16 / kLengthCap, frac);
}

double block_length(const std::vector<BlockInfo>& blocks, std::uint64_t n) {
  for (const BlockInfo& b : blocks) {
    if (b.end && n > *b.end) continue;
    if (b.kind == BlockInfo::Kind::constant) return b.value;
    return std::min(b.c / static_cast<double>(n), b.cap);
  }
  throw DomainError("block sequence evaluated beyond its last block");
}

bool ge_rel(double x, double y) { return x >= y - 1e-12 * std::abs(y); }

/// Smallest integer n >= lower with ln n >= y (up to 1e-12 relative), if representable.
std::optional<std::uint64_t> exact_at_least(double y, std::uint64_t lower) {
  if (y > kExactLogLimit) return std::nullopt;
  auto n = static_cast<std::uint64_t>(std::ceil(std::exp(y)));
  n = std::max(n, lower);
  while (n > lower && ge_rel(std::log(static_cast<double>(n - 1)), y)) --n;
  while (!ge_rel(std::log(static_cast<double>(n)), y)) ++n;
  return n;
}

/// Direct evaluation of S_n and the Shepp partial over a partially built schedule.
struct DirectEngine {
  double a = 1.0;
  std::uint64_t n = 0;
  CompensatedSum sum;
  CompensatedSum sum2;
  LogSumExp shepp;

  void advance(const std::vector<BlockInfo>& blocks, std::uint64_t target) {
    for (std::uint64_t k = n + 1; k <= target; ++k) {
      const double l = block_length(blocks, k);
      sum.add(l);
      sum2.add(l * l);
      shepp.add_log(a * sum.value() - 2.0 * std::log(static_cast<double>(k)));
    }
    n = std::max(n, target);
  }
};

void finish_constant_block(BlockInfo& blk, const BlockInfo* prev, double log_size,
                           std::optional<std::uint64_t> size, double sum_prev,
                           double ell2_prev) {
  blk.kind = BlockInfo::Kind::constant;
  blk.log_size = log_size;
  blk.log_start = prev ? prev->log_end : kNegInf;
  blk.start = prev ? prev->end : std::optional<std::uint64_t>(0);
  blk.log_end = log_add(blk.log_start, log_size);
  if (blk.start && size && *size <= (std::uint64_t{1} << 62) - *blk.start) {
    blk.end = *blk.start + *size;
    blk.value = std::log(static_cast<double>(*size)) / static_cast<double>(*size);
  } else {
    blk.end.reset();
    blk.value = std::exp(std::log(log_size) - log_size);
  }
  blk.log_value = std::log(log_size) - log_size;
  blk.sum_end = sum_prev + log_size;
  blk.ell2_end = ell2_prev + std::exp(2.0 * std::log(log_size) - log_size);
  blk.s2_ratio_end = std::exp(blk.log_end + blk.log_value) / blk.sum_end;
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::harmonic:
      return "harmonic";
    case Family::power:
      return "power";
    case Family::constant:
      return "constant";
    case Family::log_harmonic:
      return "logharmonic";
    case Family::block_a:
      return "blockA";
    case Family::block_b:
      return "blockB";
    default:
      return "explicit";
  }
}

LengthSequence LengthSequence::harmonic(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("harmonic: c must be positive");
  LengthSequence s;
  s.family_ = Family::harmonic;
  s.p0_ = c;
  return s;
}

LengthSequence LengthSequence::power(double a, double t) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("power: a must be positive");
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("power: t must be positive");
  if (t == 1.0) {
    LengthSequence s = harmonic(a);
    return s;
  }
  LengthSequence s;
  s.family_ = Family::power;
  s.p0_ = a;
  s.p1_ = t;
  return s;
}

LengthSequence LengthSequence::constant(double ell) {
  if (!(ell > 0.0 && ell < 1.0)) throw DomainError("constant: length must lie in (0,1)");
  LengthSequence s;
  s.family_ = Family::constant;
  s.p0_ = ell;
  return s;
}

LengthSequence LengthSequence::log_harmonic() {
  LengthSequence s;
  s.family_ = Family::log_harmonic;
  return s;
}

LengthSequence LengthSequence::explicit_table(std::vector<double> table,
                                              std::optional<LengthSequence> tail) {
  if (table.empty()) throw DomainError("explicit: empty table");
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!(table[i] > 0.0 && table[i] < 1.0)) {
      throw DomainError("explicit: length " + std::to_string(i + 1) + " outside (0,1)");
    }
    if (i > 0 && table[i] > table[i - 1]) {
      throw DomainError("explicit: lengths increase at n=" + std::to_string(i + 1));
    }
  }
  LengthSequence s;
  s.family_ = Family::explicit_table;
  if (tail) {
    if ((*tail)(table.size() + 1) > table.back()) {
      throw DomainError("explicit: tail exceeds the last table entry");
    }
    s.tail_ = std::make_shared<const LengthSequence>(std::move(*tail));
  }
  s.table_ = std::make_shared<const std::vector<double>>(std::move(table));
  return s;
}

std::optional<std::uint64_t> LengthSequence::horizon() const {
  switch (family_) {
    case Family::block_a:
    case Family::block_b:
      return schedule_->blocks.back().end;
    case Family::explicit_table:
      if (tail_) return tail_->horizon();
      return table_->size();
    default:
      return std::nullopt;
  }
}

double LengthSequence::operator()(std::uint64_t n) const {
  if (n == 0) throw DomainError("lengths are indexed from n = 1");
  const auto nd = static_cast<double>(n);
  switch (family_) {
    case Family::harmonic:
      return std::min(p0_ / nd, kLengthCap);
    case Family::power:
      return std::min(p0_ / std::pow(nd, p1_), kLengthCap);
    case Family::constant:
      return p0_;
    case Family::log_harmonic:
      return log_harmonic_value(n);
    case Family::block_a:
    case Family::block_b: {
      const auto h = horizon();
      if (h && n > *h) throw DomainError("block sequence evaluated beyond its horizon");
      return block_length(schedule_->blocks, n);
    }
    case Family::explicit_table:
      if (n <= table_->size()) return (*table_)[n - 1];
      if (tail_) return (*tail_)(n);
      throw DomainError("explicit table evaluated beyond its horizon");
  }
  return 0.0;
}

std::vector<double> LengthSequence::prefix(std::uint64_t n) const {
  const auto h = horizon();
  if (h && n > *h) throw DomainError("prefix length exceeds the sequence horizon");
  std::vector<double> out(n);
  for (std::uint64_t k = 1; k <= n; ++k) {
    const double l = (*this)(k);
    if (!(l > 0.0 && l < 1.0)) {
      throw ValidationError("length outside (0,1) at n=" + std::to_string(k));
    }
    if (k > 1 && l > out[k - 2]) {
      throw ValidationError("lengths increase at n=" + std::to_string(k));
    }
    out[k - 1] = l;
  }
  return out;
}

std::string LengthSequence::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (family_) {
    case Family::harmonic:
      os << "harmonic:" << p0_;
      break;
    case Family::power:
      os << "power:" << p0_ << ':' << p1_;
      break;
    case Family::constant:
      os << "const:" << p0_;
      break;
    case Family::log_harmonic:
      os << "logharmonic";
      break;
    case Family::block_a:
      os << "blockA:" << schedule_->blocks.size();
      break;
    case Family::block_b:
      os << "blockB:" << schedule_->blocks.size() << ':' << p0_;
      break;
    case Family::explicit_table:
      os << "explicit[" << table_->size() << ']';
      if (tail_) os << '+' << tail_->describe();
      break;
  }
  return os.str();
}

LengthSequence block_sequence_A(int k_max) {
  if (k_max < 1 || k_max > 12) throw DomainError("blockA: k_max must lie in [1, 12]");
  auto sched = std::make_shared<BlockSchedule>();
  sched->shepp_a = 1.0;
  DirectEngine direct;
  direct.a = sched->shepp_a;
  double sum = 0.0;
  double ell2 = 0.0;
  double log_n_prev = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    std::optional<std::uint64_t> size;
    double log_size = 0.0;
    if (k == 1) {
      size = 3;
      log_size = std::log(3.0);
    } else {
      const double target =
          std::max(2.0 * log_n_prev, static_cast<double>(k) * static_cast<double>(k) * sum);
      const BlockInfo& prev = sched->blocks.back();
      const std::uint64_t lower =
          (prev.end && prev.start && *prev.end - *prev.start < (std::uint64_t{1} << 31))
              ? (*prev.end - *prev.start) * (*prev.end - *prev.start)
              : 0;
      size = exact_at_least(target, lower);
      log_size = size ? std::log(static_cast<double>(*size)) : target;
    }
    if (!std::isfinite(log_size) || log_size > kLogRangeLimit) {
      throw DomainError("blockA: schedule leaves the representable range");
    }
    BlockInfo blk;
    blk.index = k;
    finish_constant_block(blk, sched->blocks.empty() ? nullptr : &sched->blocks.back(), log_size,
                          size, sum, ell2);
    sum = blk.sum_end;
    ell2 = blk.ell2_end;
    log_n_prev = log_size;
    sched->blocks.push_back(blk);
    BlockInfo& cur = sched->blocks.back();
    if (cur.end && *cur.end <= kDirectLimit) {
      direct.advance(sched->blocks, *cur.end);
      cur.shepp_log_lower_end = direct.shepp.log_value();
      cur.shepp_exact = true;
      cur.sum_end = direct.sum.value();
      cur.ell2_end = direct.sum2.value();
      sum = cur.sum_end;
      ell2 = cur.ell2_end;
    } else {
      cur.shepp_log_lower_end = sched->blocks.size() > 1
                                    ? sched->blocks[sched->blocks.size() - 2].shepp_log_lower_end
                                    : kNegInf;
    }
  }
  LengthSequence s;
  s.family_ = Family::block_a;
  s.p0_ = static_cast<double>(k_max);
  s.schedule_ = std::move(sched);
  return s;
}

LengthSequence block_sequence_B(int k_max, double c) {
  if (k_max < 1 || k_max > 12) throw DomainError("blockB: k_max must lie in [1, 12]");
  if (!(c > 1.0) || !std::isfinite(c)) throw DomainError("blockB: c must exceed 1");
  auto sched = std::make_shared<BlockSchedule>();
  const double a = 1.0 / c;
  sched->shepp_a = a;
  DirectEngine direct;
  direct.a = a;
  auto out_of_range = [k_max](int b) {
    return DomainError("blockB: k_max=" + std::to_string(k_max) +
                       " out of range; block " + std::to_string(b) +
                       " leaves the representable range");
  };
  double sum = 0.0;
  double ell2 = 0.0;
  for (int b = 1; b <= k_max; ++b) {
    const BlockInfo* prev = sched->blocks.empty() ? nullptr : &sched->blocks.back();
    const bool harmonic = b >= 3 && b % 2 == 1;
    BlockInfo blk;
    blk.index = b;
    if (!harmonic) {
      std::optional<std::uint64_t> size;
      double log_size = 0.0;
      if (b == 1) {
        size = 3;
        log_size = std::log(3.0);
      } else {
        const double last_log_ell = prev->kind == BlockInfo::Kind::constant
                                        ? prev->log_value
                                        : std::log(c) - prev->log_end;
        // smallest y = ln n with y - ln y >= -ln(previous length)
        const double L = -last_log_ell;
        double y = std::max(L, 1.0);
        for (int it = 0; it < 200; ++it) {
          const double next = L + std::log(y);
          if (next <= y * (1.0 + 1e-15)) {
            y = next;
            break;
          }
          y = next;
        }
        y *= 1.0 + 1e-12;
        const double target = std::max({2.0 * prev->log_size,
                                        static_cast<double>(b) * static_cast<double>(b) * sum, y});
        std::uint64_t lower = 0;
        if (prev->start && prev->end && *prev->end - *prev->start < (std::uint64_t{1} << 31)) {
          lower = (*prev->end - *prev->start) * (*prev->end - *prev->start);
        }
        size = exact_at_least(target, lower);
        log_size = size ? std::log(static_cast<double>(*size)) : target;
      }
      if (!std::isfinite(log_size) || log_size > kLogRangeLimit) throw out_of_range(b);
      finish_constant_block(blk, prev, log_size, size, sum, ell2);
      if (prev) {
        const double prev_last = prev->kind == BlockInfo::Kind::constant
                                     ? prev->log_value
                                     : std::log(c) - prev->log_end;
        if (blk.log_value > prev_last + 1e-12) {
          throw DomainError("blockB: monotone join failed at block " + std::to_string(b));
        }
      }
      blk.shepp_log_lower_end = prev ? prev->shepp_log_lower_end : kNegInf;
    } else {
      blk.kind = BlockInfo::Kind::harmonic;
      blk.c = c;
      blk.cap = prev->value;
      blk.log_start = prev->log_end;
      blk.start = prev->end;
      // clamp sub-block (N_prev, J] where c/n > cap
      double log_j = prev->log_end;
      std::optional<std::uint64_t> j_exact = prev->end;
      double sum_j = sum;
      double ell2_j = ell2;
      if (std::log(c) - log_add(prev->log_end, 0.0) > prev->log_value) {
        if (!prev->end) throw out_of_range(b);
        const auto nstar = static_cast<std::uint64_t>(std::ceil(c / blk.cap));
        const std::uint64_t J = std::max(*prev->end, nstar - 1);
        const auto cnt = static_cast<double>(J - *prev->end);
        sum_j += blk.cap * cnt;
        ell2_j += blk.cap * blk.cap * cnt;
        j_exact = J;
        log_j = std::log(static_cast<double>(J));
        blk.clamped = J > *prev->end;
        if (blk.clamped) {
          sched->notes.push_back("block " + std::to_string(b) + ": clamp active for n in (" +
                                 std::to_string(*prev->end) + ", " + std::to_string(J) + "]");
        }
      }
      double shepp_j = prev->shepp_log_lower_end;
      bool direct_ok = j_exact && *j_exact <= kDirectLimit && direct.n == *prev->end;
      std::vector<BlockInfo> provisional = sched->blocks;
      BlockInfo probe = blk;
      probe.end.reset();
      provisional.push_back(probe);
      if (direct_ok) {
        direct.advance(provisional, *j_exact);
        shepp_j = direct.shepp.log_value();
        sum_j = direct.sum.value();
        ell2_j = direct.sum2.value();
      }
      const double log_j1 = log_add(log_j, 0.0);
      const double need = static_cast<double>(b) * (1.0 + 1e-9) - std::exp(shepp_j);
      double log_ratio = 0.0;
      if (need > 0.0) {
        const double log_ratio_log = std::log(need) + log_j1 - a * sum_j;
        if (log_ratio_log > std::log(kLogRangeLimit)) throw out_of_range(b);
        log_ratio = std::exp(log_ratio_log);
      }
      const double log_m_shepp = log_j1 + log_ratio;
      const double log_m_sq = log_add(prev->log_end, 2.0 * prev->log_size);
      double log_m = std::max(log_m_shepp, log_m_sq);
      if (!std::isfinite(log_m) || log_m > kLogRangeLimit) throw out_of_range(b);
      std::optional<std::uint64_t> m_exact;
      if (log_m <= kExactLogLimit && j_exact) {
        std::uint64_t lower = *j_exact + 1;
        if (prev->start && prev->end && *prev->end - *prev->start < (std::uint64_t{1} << 31)) {
          lower = std::max(lower, *prev->end + (*prev->end - *prev->start) * (*prev->end - *prev->start));
        }
        auto m = static_cast<std::uint64_t>(std::ceil(std::exp(log_m)));
        m = std::max(m, lower);
        while (std::log(static_cast<double>(m) + 1.0) - std::log(static_cast<double>(*j_exact) + 1.0) <
               log_ratio) {
          ++m;
        }
        m_exact = m;
        log_m = std::log(static_cast<double>(m));
      }
      blk.end = m_exact;
      blk.log_end = log_m;
      blk.log_size = m_exact && blk.start ? std::log(static_cast<double>(*m_exact - *blk.start))
                                          : log_m + std::log1p(-std::exp(blk.log_start - log_m));
      const double log_growth = std::max(log_ratio, log_m - log_j1);
      if (m_exact && *m_exact <= kDirectLimit && direct_ok) {
        provisional.back() = blk;
        direct.advance(provisional, *m_exact);
        blk.sum_end = direct.sum.value();
        blk.ell2_end = direct.sum2.value();
        blk.shepp_log_lower_end = direct.shepp.log_value();
        blk.shepp_exact = true;
      } else {
        blk.sum_end = sum_j + c * log_growth;
        blk.ell2_end = ell2_j + c * c * std::exp(-log_j1);
        blk.shepp_log_lower_end = log_add(shepp_j, a * sum_j - log_j1 + std::log(log_growth));
      }
      blk.value = std::exp(std::log(c) - log_m);
      blk.log_value = std::log(c) - log_m;
      blk.s2_ratio_end = std::min(c, blk.cap * std::exp(log_m)) / blk.sum_end;
    }
    sum = blk.sum_end;
    ell2 = blk.ell2_end;
    sched->blocks.push_back(blk);
    BlockInfo& cur = sched->blocks.back();
    if (cur.kind == BlockInfo::Kind::constant && cur.end && *cur.end <= kDirectLimit &&
        (cur.start ? direct.n == *cur.start : false)) {
      direct.advance(sched->blocks, *cur.end);
      cur.sum_end = direct.sum.value();
      cur.ell2_end = direct.sum2.value();
      cur.shepp_log_lower_end = direct.shepp.log_value();
      cur.shepp_exact = true;
      sum = cur.sum_end;
      ell2 = cur.ell2_end;
    }
  }
  LengthSequence s;
  s.family_ = Family::block_b;
  s.p0_ = c;
  s.schedule_ = std::move(sched);
  return s;
}

PrefixTable make_prefix_table(const LengthSequence& seq, std::uint64_t n) {
  PrefixTable t;
  t.ell = seq.prefix(n);
  t.sum.resize(n + 1);
  CompensatedSum s;
  t.sum[0] = 0.0;
  for (std::uint64_t k = 0; k < n; ++k) {
    s.add(t.ell[k]);
    t.sum[k + 1] = s.value();
  }
  return t;
}

std::vector<double> shepp_log_partials(const LengthSequence& seq, double a,
                                       std::span<const std::uint64_t> checkpoints) {
  if (!(a >= 0.0)) throw DomainError("shepp: a must be nonnegative");
  std::vector<double> out;
  out.reserve(checkpoints.size());
  if (checkpoints.empty()) return out;
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) || checkpoints.front() < 1) {
    throw DomainError("shepp: checkpoints must be increasing and >= 1");
  }
  CompensatedSum s;
  LogSumExp acc;
  std::size_t next = 0;
  double prev = kLengthCap + 1.0;
  for (std::uint64_t n = 1; next < checkpoints.size(); ++n) {
    const double l = seq(n);
    if (!(l > 0.0 && l < 1.0) || l > prev) {
      throw ValidationError("lengths invalid at n=" + std::to_string(n));
    }
    prev = l;
    s.add(l);
    acc.add_log(a * s.value() - 2.0 * std::log(static_cast<double>(n)));
    while (next < checkpoints.size() && checkpoints[next] == n) {
      out.push_back(acc.log_value());
      ++next;
    }
  }
  return out;
}

double shepp_log_partial(const LengthSequence& seq, double a, std::uint64_t n) {
  const std::uint64_t cp[] = {n};
  return shepp_log_partials(seq, a, cp).front();
}

Verdict shepp_classify(const LengthSequence& seq, double a) {
  if (!(a >= 0.0)) throw DomainError("shepp: a must be nonnegative");
  if (a == 0.0) return Verdict::converges;
  switch (seq.family()) {
    case Family::harmonic:
      return a * seq.p0() >= 1.0 ? Verdict::diverges : Verdict::converges;
    case Family::power:
      return seq.p1() > 1.0 ? Verdict::converges : Verdict::diverges;
    case Family::constant:
      return Verdict::diverges;
    case Family::log_harmonic:
      return a > 0.5 ? Verdict::diverges : Verdict::converges;
    case Family::block_b:
      return a >= 1.0 / seq.p0() ? Verdict::diverges : Verdict::unknown;
    default:
      return Verdict::unknown;
  }
}

std::optional<double> shepp_tail_bound(const LengthSequence& seq, double a, std::uint64_t n) {
  if (n < 2 || shepp_classify(seq, a) != Verdict::converges) return std::nullopt;
  const auto nd = static_cast<double>(n);
  switch (seq.family()) {
    case Family::harmonic: {
      // S_k <= c (1 + ln k)
      const double ac = a * seq.p0();
      return std::exp(ac) * std::pow(nd, ac - 1.0) / (1.0 - ac);
    }
    case Family::power: {
      // S_k <= a0 zeta(t) <= a0 t / (t - 1)
      const double t = seq.p1();
      return std::exp(a * seq.p0() * t / (t - 1.0)) / nd;
    }
    case Family::log_harmonic: {
      if (nd < static_cast<double>(kLogHarmonicStart)) return std::nullopt;
      // For k >= 16: S_k <= S_15 + 2 ln(k/15) - 4 ln(ln(k+1)/ln 16).
      CompensatedSum s15;
      for (std::uint64_t k = 1; k < kLogHarmonicStart; ++k) s15.add(log_harmonic_value(k));
      const double log_c =
          a * (s15.value() - 2.0 * std::log(15.0) + 4.0 * std::log(std::log(16.0)));
      const double ln_n = std::log(nd);
      if (a == 0.5) return std::exp(log_c) / ln_n;
      return std::exp(log_c) * std::pow(nd, 2.0 * a - 1.0) /
             ((1.0 - 2.0 * a) * std::pow(ln_n, 4.0 * a));
    }
    default:
      return std::nullopt;
  }
}

std::optional<double> shepp_growth_delta(const LengthSequence& seq, double a) {
  if (shepp_classify(seq, a) != Verdict::diverges) return std::nullopt;
  switch (seq.family()) {
    case Family::harmonic: {
      const double ac = a * seq.p0();
      if (ac == 1.0) return 0.05;
      return std::min(0.5 * (std::pow(10.0, ac - 1.0) - 1.0), 1.0);
    }
    case Family::constant:
    case Family::power:
      return 1.0;
    case Family::log_harmonic:
      return 1e-3;
    default:
      return std::nullopt;
  }
}

Verdict ell1_classify(const LengthSequence& seq) {
  switch (seq.family()) {
    case Family::power:
      return seq.p1() > 1.0 ? Verdict::converges : Verdict::diverges;
    case Family::explicit_table:
      return Verdict::unknown;
    default:
      return Verdict::diverges;
  }
}

Verdict ell2_classify(const LengthSequence& seq) {
  switch (seq.family()) {
    case Family::power:
      return seq.p1() > 0.5 ? Verdict::converges : Verdict::diverges;
    case Family::constant:
      return Verdict::diverges;
    case Family::explicit_table:
      return Verdict::unknown;
    default:
      return Verdict::converges;
  }
}

Lemma34Witness lemma34_check(const LengthSequence& seq, double a, std::uint64_t n) {
  Lemma34Witness w;
  w.horizon = n;
  w.ell2 = ell2_classify(seq);
  CompensatedSum s;
  LogSumExp acc;
  for (std::uint64_t k = 1; k <= n; ++k) {
    const double l = seq(k);
    s.add(l);
    const double kd = static_cast<double>(k);
    const double log_term = a * s.value() - 2.0 * std::log(kd);
    acc.add_log(log_term);
    if (l > std::pow(kd, -2.0 / 3.0)) {
      ++w.count;
      if (w.indices.size() < 32) {
        w.indices.push_back(k);
        w.log_terms.push_back(log_term);
        w.log_term_floor.push_back(-2.0 * std::log(kd) + a * std::cbrt(kd));
      }
    }
  }
  w.log_partial = acc.log_value();
  return w;
}

double s2_ratio(const LengthSequence& seq, std::uint64_t n) {
  if (n == 0) throw DomainError("s2_ratio: n must be >= 1");
  CompensatedSum s;
  for (std::uint64_t k = 1; k <= n; ++k) s.add(seq(k));
  return static_cast<double>(n) * seq(n) / s.value();
}

S2Report s2_limsup_estimate(const LengthSequence& seq, std::span<const std::uint64_t> checkpoints) {
  S2Report r;
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) {
    throw DomainError("s2: checkpoints must be increasing");
  }
  if (!checkpoints.empty()) {
    CompensatedSum s;
    std::size_t next = 0;
    for (std::uint64_t n = 1; next < checkpoints.size(); ++n) {
      const double l = seq(n);
      s.add(l);
      while (next < checkpoints.size() && checkpoints[next] == n) {
        r.checkpoints.push_back(n);
        r.ratios.push_back(static_cast<double>(n) * l / s.value());
        ++next;
      }
    }
  }
  if (const BlockSchedule* sch = seq.schedule()) {
    for (const BlockInfo& b : sch->blocks) r.max_ratio = std::max(r.max_ratio, b.s2_ratio_end);
  }
  for (double x : r.ratios) r.max_ratio = std::max(r.max_ratio, x);
  switch (seq.family()) {
    case Family::harmonic:
    case Family::log_harmonic:
      r.analytic_limsup = 0.0;
      break;
    case Family::power:
      r.analytic_limsup = seq.p1() < 1.0 ? 1.0 - seq.p1() : 0.0;
      break;
    case Family::constant:
    case Family::block_a:
    case Family::block_b:
      r.analytic_limsup = 1.0;
      break;
    default:
      break;
  }
  if (r.analytic_limsup) r.s2_holds = *r.analytic_limsup < 1.0 ? TriState::yes : TriState::no;
  return r;
}

SeriesDiagnostics diagnose(const LengthSequence& seq, std::span<const std::uint64_t> checkpoints,
                           std::span<const double> a_values) {
  SeriesDiagnostics d;
  d.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  d.a_values.assign(a_values.begin(), a_values.end());
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
      (!checkpoints.empty() && checkpoints.front() < 1)) {
    throw DomainError("diagnose: checkpoints must be increasing and >= 1");
  }
  CompensatedSum s;
  CompensatedSum s2;
  std::vector<LogSumExp> shepp(a_values.size());
  d.shepp_log.assign(a_values.size(), {});
  std::size_t next = 0;
  for (std::uint64_t n = 1; next < checkpoints.size(); ++n) {
    const double l = seq(n);
    s.add(l);
    s2.add(l * l);
    for (std::size_t i = 0; i < a_values.size(); ++i) {
      shepp[i].add_log(a_values[i] * s.value() - 2.0 * std::log(static_cast<double>(n)));
    }
    while (next < checkpoints.size() && checkpoints[next] == n) {
      d.sum_ell.push_back(s.value());
      d.sum_ell2.push_back(s2.value());
      d.s2_ratio.push_back(static_cast<double>(n) * l / s.value());
      for (std::size_t i = 0; i < a_values.size(); ++i) d.shepp_log[i].push_back(shepp[i].log_value());
      ++next;
    }
  }
  d.ell1 = ell1_classify(seq);
  d.ell2 = ell2_classify(seq);
  for (double a : a_values) d.shepp.push_back(shepp_classify(seq, a));
  return d;
}

std::vector<std::uint64_t> log_checkpoints(std::uint64_t n, int per_decade) {
  if (per_decade < 1) throw DomainError("checkpoints: per_decade must be >= 1");
  std::vector<std::uint64_t> out;
  for (int i = 0;; ++i) {
    const double v = std::round(std::pow(10.0, static_cast<double>(i) / per_decade));
    if (v > static_cast<double>(n)) break;
    const auto k = static_cast<std::uint64_t>(v);
    if (out.empty() || k > out.back()) out.push_back(k);
  }
  if (n >= 1 && (out.empty() || out.back() != n)) out.push_back(n);
  return out;
}

}  // namespace dvcover
