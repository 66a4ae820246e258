#include "dvcover/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <set>
#include <sstream>

#include "dvcover/config.hpp"
#include "dvcover/errors.hpp"
#include "dvcover/numerics.hpp"

namespace dvcover {

namespace {

using ojson = nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string cell_text(const Cell& c) {
  struct Visitor {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::uint64_t u) const { return std::to_string(u); }
    std::string operator()(double d) const { return std::isfinite(d) ? format_double(d) : std::string{}; }
    std::string operator()(const std::string& s) const { return csv_escape(s); }
  };
  return std::visit(Visitor{}, c);
}

ojson cell_json(const Cell& c) {
  struct Visitor {
    ojson operator()(std::monostate) const { return nullptr; }
    ojson operator()(bool b) const { return b; }
    ojson operator()(std::uint64_t u) const { return u; }
    ojson operator()(double d) const { return std::isfinite(d) ? ojson(d) : ojson(nullptr); }
    ojson operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, c);
}

Cell json_cell(const ojson& v) {
  if (v.is_null()) return std::monostate{};
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_float()) return v.get<double>();
  if (v.is_number_integer()) return static_cast<double>(v.get<std::int64_t>());
  if (v.is_string()) return v.get<std::string>();
  throw ValidationError("jsonl: nested values are not table cells");
}

Cell opt(const std::optional<double>& v) {
  if (v) return *v;
  return std::monostate{};
}

Cell opt(const std::optional<std::uint64_t>& v) {
  if (v) return *v;
  return std::monostate{};
}

std::string describe_set(const ArcSet& s) {
  if (s.is_full()) return "full";
  if (s.empty()) return "empty";
  std::ostringstream os;
  bool first = true;
  for (const Arc& a : s.arcs()) {
    if (!first) os << ',';
    first = false;
    if (a.length == 0.0) {
      os << "point:" << format_double(a.start);
    } else {
      os << "arc:" << format_double(a.start) << ':' << format_double(wrap01(a.end()));
    }
  }
  return os.str();
}

std::vector<std::uint64_t> clamp_to_horizon(std::vector<std::uint64_t> cps, const LengthSequence& seq) {
  if (const auto h = seq.horizon()) {
    cps.erase(std::remove_if(cps.begin(), cps.end(), [&](std::uint64_t n) { return n > *h; }),
              cps.end());
  }
  return cps;
}

}  // namespace

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw ValidationError("table row width does not match the header");
  rows.push_back(std::move(row));
}

Format parse_format(std::string_view name) {
  if (name == "csv") return Format::csv;
  if (name == "jsonl" || name == "json") return Format::jsonl;
  throw ValidationError("unknown format '" + std::string(name) + "'");
}

void emit(const Table& table, Format format, std::ostream& out) {
  if (format == Format::csv) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      out << (i ? "," : "") << csv_escape(table.columns[i]);
    }
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_text(row[i]);
      out << '\n';
    }
    return;
  }
  for (const auto& row : table.rows) {
    ojson rec = ojson::object();
    for (std::size_t i = 0; i < row.size(); ++i) rec[table.columns[i]] = cell_json(row[i]);
    out << rec.dump() << '\n';
  }
}

void emit(const Table& table, Format format, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path);
  emit(table, format, out);
  out.flush();
  if (!out) throw ValidationError("write failed for " + path);
}

Table read_jsonl(std::istream& in) {
  Table t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ojson rec;
    try {
      rec = ojson::parse(line);
    } catch (const ojson::exception& e) {
      throw ValidationError(std::string("jsonl: ") + e.what());
    }
    if (!rec.is_object()) throw ValidationError("jsonl: each line must be an object");
    if (t.columns.empty() && t.rows.empty()) {
      for (const auto& [k, v] : rec.items()) t.columns.push_back(k);
    }
    std::vector<Cell> row;
    for (const auto& col : t.columns) {
      if (!rec.contains(col)) throw ValidationError("jsonl: record lacks column " + col);
      row.push_back(json_cell(rec[col]));
    }
    if (rec.size() != t.columns.size()) throw ValidationError("jsonl: record has extra columns");
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_trials_jsonl(std::span<const TrialResult> trials, std::ostream& out) {
  for (const TrialResult& r : trials) {
    ojson rec = ojson::object();
    rec["seed"] = r.seed;
    rec["cover_time"] = r.cover_time ? ojson(*r.cover_time) : ojson(nullptr);
    rec["initial_uncovered"] = r.initial_uncovered;
    rec["steps"] = r.steps;
    ojson traj = ojson::array();
    for (const auto& p : r.trajectory) traj.push_back(ojson{{"n", p.n}, {"uncovered", p.uncovered}});
    rec["trajectory"] = std::move(traj);
    if (!r.first_hits.empty()) {
      ojson hits = ojson::array();
      for (const auto& h : r.first_hits) hits.push_back(h ? ojson(*h) : ojson(nullptr));
      rec["first_hits"] = std::move(hits);
    }
    out << rec.dump() << '\n';
  }
}

std::vector<TrialResult> read_trials_jsonl(std::istream& in) {
  std::vector<TrialResult> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const ojson rec = ojson::parse(line);
      TrialResult r;
      r.seed = rec.at("seed").get<std::uint64_t>();
      if (!rec.at("cover_time").is_null()) r.cover_time = rec["cover_time"].get<std::uint64_t>();
      r.initial_uncovered = rec.at("initial_uncovered").get<double>();
      r.steps = rec.at("steps").get<std::uint64_t>();
      for (const auto& p : rec.at("trajectory")) {
        r.trajectory.push_back({p.at("n").get<std::uint64_t>(), p.at("uncovered").get<double>()});
      }
      if (rec.contains("first_hits")) {
        for (const auto& h : rec["first_hits"]) {
          r.first_hits.push_back(h.is_null() ? std::nullopt
                                             : std::optional<std::uint64_t>(h.get<std::uint64_t>()));
        }
      }
      out.push_back(std::move(r));
    } catch (const ojson::exception& e) {
      throw ValidationError(std::string("trial jsonl: ") + e.what());
    }
  }
  return out;
}

Table trials_table(std::span<const TrialResult> trials) {
  Table t{{"seed", "cover_time", "n", "uncovered"}, {}};
  for (const TrialResult& r : trials) {
    for (const auto& p : r.trajectory) t.add_row({r.seed, opt(r.cover_time), p.n, p.uncovered});
  }
  return t;
}

// ---------------------------------------------------------------------------
// phase transition sweep

Table SweepResult::cells_table() const {
  Table t{{"c", "n", "mc_mean", "mc_se", "exact", "trials", "seed_first", "seed_last", "cover_fraction"},
          {}};
  for (const SweepCell& c : cells) {
    t.add_row({c.c, c.n, opt(c.mc_mean), opt(c.mc_se), opt(c.exact), c.trials, c.seed_first, c.seed_last,
               c.cover_fraction});
  }
  return t;
}

Table SweepResult::fits_table() const {
  Table t{{"c", "source", "slope", "slope_stderr", "ci_lo", "ci_hi", "predicted", "points"}, {}};
  for (const SweepFit& f : fits) {
    t.add_row({f.c, f.source, f.slope, f.slope_stderr, f.ci_lo, f.ci_hi, f.predicted,
               static_cast<std::uint64_t>(f.points)});
  }
  return t;
}

namespace {

std::optional<SweepFit> make_fit(double c, std::string source, double predicted,
                                 const std::vector<std::uint64_t>& ns, const std::vector<double>& ys,
                                 double lo, double hi) {
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const auto n = static_cast<double>(ns[i]);
    if (n >= lo && n <= hi && ys[i] > 0.0) {
      lx.push_back(std::log(n));
      ly.push_back(std::log(ys[i]));
    }
  }
  if (lx.size() < 3) return std::nullopt;
  const LinearFit lf = fit_line(lx, ly);
  SweepFit f;
  f.c = c;
  f.source = std::move(source);
  f.slope = lf.slope;
  f.slope_stderr = lf.slope_stderr;
  f.ci_lo = lf.slope - 1.96 * lf.slope_stderr;
  f.ci_hi = lf.slope + 1.96 * lf.slope_stderr;
  f.predicted = predicted;
  f.points = lx.size();
  return f;
}

void check_sweep(const SweepConfig& cfg) {
  for (double c : cfg.c_grid) {
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("sweep: c values must be positive");
  }
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    if (cfg.n_grid[i] < 1 || (i > 0 && cfg.n_grid[i] <= cfg.n_grid[i - 1])) {
      throw DomainError("sweep: N grid must be strictly increasing and >= 1");
    }
  }
  if (!(cfg.fit_lo > 0.0 && cfg.fit_lo < cfg.fit_hi)) throw DomainError("sweep: need 0 < fit_lo < fit_hi");
  if (cfg.fit_per_decade < 1) throw DomainError("sweep: fit_per_decade must be >= 1");
}

}  // namespace

SweepResult phase_transition_sweep(const SweepConfig& cfg) {
  check_sweep(cfg);
  SweepResult res;
  res.m_f = cfg.density.ess_inf();
  const std::uint64_t n_max = cfg.n_grid.empty() ? 0 : cfg.n_grid.back();
  for (std::size_t ci = 0; ci < cfg.c_grid.size(); ++ci) {
    const double c = cfg.c_grid[ci];
    const LengthSequence seq = LengthSequence::harmonic(c);
    const double predicted = -c * res.m_f;
    const std::uint64_t seed0 = cfg.seed + ci * cfg.trials;

    std::vector<SweepCell> cells(cfg.n_grid.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      cells[k].c = c;
      cells[k].n = cfg.n_grid[k];
      cells[k].trials = cfg.trials;
      cells[k].seed_first = seed0;
      cells[k].seed_last = cfg.trials ? seed0 + cfg.trials - 1 : seed0;
    }

    if (cfg.trials > 0 && n_max > 0) {
      TrialConfig tc;
      tc.density = cfg.density;
      tc.lengths = seq;
      tc.n_max = n_max;
      tc.target = cfg.target;
      tc.seed = seed0;
      tc.checkpoints = cfg.n_grid;
      const auto trials = run_trials(tc, cfg.trials, cfg.threads);
      for (std::size_t k = 0; k < cells.size(); ++k) {
        std::vector<double> u(trials.size());
        std::uint64_t covered = 0;
        for (std::size_t t = 0; t < trials.size(); ++t) {
          u[t] = trials[t].trajectory[k].uncovered;
          if (trials[t].cover_time && *trials[t].cover_time <= cfg.n_grid[k]) ++covered;
        }
        const MeanEstimate e = mean_and_stderr(u);
        cells[k].mc_mean = e.mean;
        cells[k].mc_se = e.std_error;
        cells[k].cover_fraction = static_cast<double>(covered) / static_cast<double>(trials.size());
      }
      std::vector<double> means;
      for (const auto& cell : cells) means.push_back(*cell.mc_mean);
      if (auto f = make_fit(c, "mc", predicted, cfg.n_grid, means, cfg.fit_lo, cfg.fit_hi)) {
        res.fits.push_back(*f);
      }
    }

    if (cfg.exact) {
      std::set<std::uint64_t> pts(cfg.n_grid.begin(), cfg.n_grid.end());
      const auto fit_top = static_cast<std::uint64_t>(cfg.fit_hi);
      for (std::uint64_t n : log_checkpoints(fit_top, cfg.fit_per_decade)) {
        if (static_cast<double>(n) >= cfg.fit_lo) pts.insert(n);
      }
      const std::vector<std::uint64_t> all(pts.begin(), pts.end());
      const ExpectedUncovered ex = expected_uncovered_exact(cfg.density, seq, cfg.target, all);
      for (auto& cell : cells) {
        const auto it = std::lower_bound(all.begin(), all.end(), cell.n);
        cell.exact = ex.values[static_cast<std::size_t>(it - all.begin())];
      }
      if (auto f = make_fit(c, "exact", predicted, all, ex.values, cfg.fit_lo, cfg.fit_hi)) {
        res.fits.push_back(*f);
      }
    }
    res.cells.insert(res.cells.end(), cells.begin(), cells.end());
  }
  return res;
}

// ---------------------------------------------------------------------------
// criteria report

std::string_view to_string(CoverVerdict v) {
  switch (v) {
    case CoverVerdict::covered:
      return "covered";
    case CoverVerdict::not_covered:
      return "not-covered";
    case CoverVerdict::hypotheses_unmet:
      return "hypotheses-unmet";
    default:
      return "inconclusive";
  }
}

Table CriteriaReport::to_table() const {
  Table t{{"key", "value"}, {}};
  auto add = [&](std::string k, Cell v) { t.add_row({std::move(k), std::move(v)}); };
  add("density", density);
  add("lengths", lengths);
  add("m_f", m_f);
  add("K_f", describe_set(K_f));
  add("dom1", std::string(to_string(dom1)));
  add("sum_ell", std::string(to_string(ell1)));
  add("sum_ell2", std::string(to_string(ell2)));
  for (std::size_t i = 0; i < a_values.size(); ++i) {
    add("shepp(a=" + format_double(a_values[i]) + ")", std::string(to_string(shepp[i])));
  }
  add("shepp(a=m_f)", std::string(to_string(shepp_at_mf)));
  add("shepp(a>m_f)", std::string(to_string(shepp_above_mf)));
  for (const auto& fl : flatness) {
    add("flatness(x=" + format_double(fl.x) + ")", std::string(to_string(fl.classification)));
  }
  for (std::size_t i = 0; i < point_series.size(); ++i) {
    add("point_series[" + std::to_string(i) + "]", std::string(to_string(point_series[i].classification)));
  }
  if (capacity) add("capacity", std::string(to_string(capacity->outcome)));
  add("route", route);
  add("verdict", std::string(to_string(verdict)));
  for (std::size_t i = 0; i < trace.size(); ++i) add("trace." + std::to_string(i + 1), trace[i]);
  return t;
}

namespace {

std::vector<double> sample_points(const ArcSet& K) {
  std::vector<double> pts;
  for (const Arc& a : K.arcs()) {
    pts.push_back(a.start);
    if (a.length > 0.0) {
      pts.push_back(wrap01(a.start + 0.5 * a.length));
      pts.push_back(wrap01(a.end()));
    }
    if (pts.size() >= 32) break;
  }
  return pts;
}

bool has_flat_interval(const PiecewisePolyDensity& f, double m_f) {
  return std::any_of(f.pieces().begin(), f.pieces().end(), [&](const Piece& p) {
    return p.is_constant() && std::abs(p.v_lo - m_f) <= 1e-12 && p.width() > 0.0;
  });
}

CoverVerdict from_series(Verdict v) {
  if (v == Verdict::diverges) return CoverVerdict::covered;
  if (v == Verdict::converges) return CoverVerdict::not_covered;
  return CoverVerdict::inconclusive;
}

}  // namespace

CriteriaReport criteria_report(const PiecewisePolyDensity& f, const LengthSequence& lengths,
                               std::span<const double> a_list, const CriteriaOptions& opts) {
  CriteriaReport rep;
  rep.density = f.name();
  rep.lengths = lengths.describe();
  const DensityAnalysis an = analyze(f);
  rep.m_f = an.m_f;
  rep.K_f = an.K_f;
  rep.dom1 = an.dom1_holds;
  rep.ell1 = ell1_classify(lengths);
  rep.ell2 = ell2_classify(lengths);
  for (double a : a_list) {
    rep.a_values.push_back(a);
    rep.shepp.push_back(shepp_classify(lengths, a));
  }
  rep.shepp_at_mf = shepp_classify(lengths, rep.m_f);
  rep.shepp_above_mf = shepp_classify(lengths, rep.m_f > 0.0 ? rep.m_f * (1.0 + 1e-6) : 1e-6);

  const auto cps = clamp_to_horizon(opts.checkpoints, lengths);
  const auto pts = sample_points(rep.K_f);
  if (!cps.empty()) {
    for (double x : pts) rep.flatness.push_back(flatness_partial(f, an, x, lengths, cps));
  }
  auto& tr = rep.trace;
  tr.push_back("m_f = " + format_double(rep.m_f) + ", K_f = " + describe_set(rep.K_f));

  if (lengths.family() == Family::harmonic) {
    const double c = lengths.p0();
    rep.route = "harmonic_threshold";
    tr.push_back("l_n = c/n with c = " + format_double(c) + "; c m_f = " + format_double(c * rep.m_f) +
                 " against threshold 1");
    rep.verdict = c * rep.m_f >= 1.0 ? CoverVerdict::covered : CoverVerdict::not_covered;
    return rep;
  }

  if (has_flat_interval(f, rep.m_f)) {
    rep.route = "flat_interval";
    tr.push_back("f = m_f on an open interval; verdict is the Shepp series at a = m_f: " +
                 std::string(to_string(rep.shepp_at_mf)));
    rep.verdict = from_series(rep.shepp_at_mf);
    return rep;
  }

  if (rep.dom1 != TriState::yes) {
    rep.route = "dom1";
    tr.push_back("condition on local suprema near K_f is " + std::string(to_string(rep.dom1)));
    rep.verdict = rep.dom1 == TriState::no ? CoverVerdict::hypotheses_unmet : CoverVerdict::inconclusive;
    return rep;
  }

  const auto k_arcs = rep.K_f.arcs();
  const bool countable_K = std::all_of(k_arcs.begin(), k_arcs.end(), [](const Arc& a) { return a.length == 0.0; });

  if (rep.m_f == 0.0) {
    rep.route = "zero_infimum";
    if (!countable_K) {
      tr.push_back("m_f = 0 with uncountable K_f");
      rep.verdict = CoverVerdict::hypotheses_unmet;
      return rep;
    }
    const std::uint64_t n = cps.empty() ? 1 : cps.back();
    Verdict points = Verdict::diverges;
    for (double x : pts) {
      rep.point_series.push_back(borel_cantelli_point(f, x, lengths, n));
      const Verdict v = rep.point_series.back().classification;
      tr.push_back("sum of mu(B(x, r_n)) at x = " + format_double(x) + ": " + std::string(to_string(v)));
      if (v == Verdict::converges) points = Verdict::converges;
      if (v == Verdict::unknown && points == Verdict::diverges) points = Verdict::unknown;
    }
    tr.push_back("Shepp series for small a > 0: " + std::string(to_string(rep.shepp_above_mf)));
    if (points == Verdict::converges || rep.shepp_above_mf == Verdict::converges) {
      rep.verdict = CoverVerdict::not_covered;
    } else if (points == Verdict::diverges && rep.shepp_above_mf == Verdict::diverges) {
      rep.verdict = CoverVerdict::covered;
    } else {
      rep.verdict = CoverVerdict::inconclusive;
    }
    return rep;
  }

  rep.route = "positive_infimum";
  if (!countable_K) {
    tr.push_back("K_f has an arc on which f is not constant; flat translates cannot be certified");
    rep.verdict = CoverVerdict::inconclusive;
    return rep;
  }
  tr.push_back("K_f is finite, so the translate condition holds with a_0 = 0 alone");
  bool point_escapes = false;
  {
    const std::uint64_t n = cps.empty() ? 1 : cps.back();
    for (double x : pts) {
      rep.point_series.push_back(borel_cantelli_point(f, x, lengths, n));
      const Verdict v = rep.point_series.back().classification;
      tr.push_back("sum of mu(B(x, r_n)) at x = " + format_double(x) + ": " + std::string(to_string(v)));
      if (v == Verdict::converges) point_escapes = true;
    }
  }
  const Verdict c1 = rep.shepp_above_mf;
  tr.push_back("C1 (Shepp for a > m_f): " + std::string(to_string(c1)));

  std::vector<double> flat;
  bool flat_unknown = false;
  for (const auto& fl : rep.flatness) {
    if (fl.classification == Verdict::converges) flat.push_back(fl.x);
    if (fl.classification == Verdict::unknown) flat_unknown = true;
    tr.push_back("flatness at x = " + format_double(fl.x) + ": " + std::string(to_string(fl.classification)));
  }
  TriState c2 = TriState::unknown;
  if (flat_unknown || rep.flatness.size() != pts.size()) {
    c2 = TriState::unknown;
  } else if (flat.empty()) {
    tr.push_back("no flat point in K_f; capacity of the empty set is 0");
    c2 = TriState::yes;
  } else {
    const auto truncs = clamp_to_horizon(opts.truncations, lengths);
    if (!truncs.empty()) {
      rep.capacity = cap_zero_heuristic(rep.m_f, lengths, ArcSet::from_points(flat), truncs);
    }
    if (rep.ell1 == Verdict::diverges) {
      c2 = TriState::yes;
    } else if (rep.ell1 == Verdict::converges) {
      c2 = TriState::no;
    } else if (rep.capacity) {
      if (rep.capacity->outcome == CapacityReport::Outcome::diverges_for_tested) c2 = TriState::yes;
      if (rep.capacity->outcome == CapacityReport::Outcome::finite_witness) c2 = TriState::no;
    }
    tr.push_back("flat points are atoms; each has zero capacity iff sum of l_n diverges: " +
                 std::string(to_string(rep.ell1)));
  }
  tr.push_back("C2 (zero capacity of the flat part of K_f): " + std::string(to_string(c2)));
  if (point_escapes || c1 == Verdict::converges || c2 == TriState::no) {
    rep.verdict = CoverVerdict::not_covered;
  } else if (c1 == Verdict::diverges && c2 == TriState::yes) {
    rep.verdict = CoverVerdict::covered;
  } else {
    rep.verdict = CoverVerdict::inconclusive;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// recipes

bool RecipeReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

Table RecipeReport::checks_table() const {
  Table t{{"recipe", "check", "passed", "detail"}, {}};
  for (const Check& c : checks) t.add_row({recipe, c.name, c.passed, c.detail});
  return t;
}

namespace {

bool is_single_point(const ArcSet& s, double x) {
  const auto arcs = s.arcs();
  return arcs.size() == 1 && arcs[0].length == 0.0 && circle_dist(arcs[0].start, x) <= 1e-12;
}

bool is_arc(const ArcSet& s, double lo, double hi) {
  const auto arcs = s.arcs();
  return arcs.size() == 1 && std::abs(arcs[0].start - lo) <= 1e-12 &&
         std::abs(arcs[0].length - (hi - lo)) <= 1e-12;
}

std::vector<std::uint64_t> decades(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t k = 10; k <= n; k *= 10) out.push_back(k);
  if (out.empty() || out.back() != n) out.push_back(n);
  return out;
}

}  // namespace

RecipeReport section5_c1c2(Section5Demo demo, std::uint64_t n) {
  if (n < 100) throw DomainError("section5: n must be at least 100");
  const auto cps = decades(n);
  const std::uint64_t n_prev = cps[cps.size() - 2];
  RecipeReport rep;
  if (demo == Section5Demo::tent_c2_not_c1) {
    rep.recipe = "section5_c1c2/tent";
    const auto f = tent_density();
    const auto seq = LengthSequence::harmonic(0.75);
    const auto an = analyze(f);
    const auto table = make_prefix_table(seq, n);
    const auto shepp1 = shepp_log_partials(seq, 1.0, cps);
    Table t{{"n", "sum_ell", "shepp_log_a1", "shepp_tail_bound_a1"}, {}};
    for (std::size_t i = 0; i < cps.size(); ++i) {
      t.add_row({cps[i], table.sum[cps[i]], shepp1[i], opt(shepp_tail_bound(seq, 1.0, cps[i]))});
    }
    rep.tables.push_back({"partials", std::move(t)});
    rep.checks.push_back({"K_f is the single point 0 and m_f = 3/4",
                          is_single_point(an.K_f, 0.0) && std::abs(an.m_f - 0.75) <= 1e-12,
                          "K_f = " + describe_set(an.K_f) + ", m_f = " + format_double(an.m_f)});
    const double s_n = table.sum[n];
    rep.checks.push_back({"sum of lengths diverges (C2 for the point K_f)",
                          ell1_classify(seq) == Verdict::diverges && s_n >= 0.75 * std::log(static_cast<double>(n)),
                          "S_n = " + format_double(s_n) + " >= 0.75 ln n"});
    bool below = true;
    for (double a : {0.75, 1.0, 1.2, 1.3}) below = below && shepp_classify(seq, a) == Verdict::converges;
    const bool above = shepp_classify(seq, 4.0 / 3.0) == Verdict::diverges;
    rep.checks.push_back({"Shepp series converges for a < 4/3 (C1 fails)", below && above,
                          "converges at a in {0.75,1,1.2,1.3}, diverges at a = 4/3"});
    const auto tail = shepp_tail_bound(seq, 1.0, n_prev);
    const double increment = std::exp(shepp1.back()) - std::exp(shepp1[shepp1.size() - 2]);
    rep.checks.push_back({"Shepp(a=1) partials stay within the closed-form tail bound",
                          tail && increment <= *tail,
                          "P(n) - P(n/10) = " + format_double(increment) +
                              ", tail bound = " + (tail ? format_double(*tail) : "none")});
  } else {
    rep.recipe = "section5_c1c2/logharmonic";
    const auto f = step_density(0.5, 1.5, 0.5);
    const auto seq = LengthSequence::log_harmonic();
    const auto an = analyze(f);
    const auto table = make_prefix_table(seq, n);
    const auto s05 = shepp_log_partials(seq, 0.5, cps);
    const auto s06 = shepp_log_partials(seq, 0.6, cps);
    Table t{{"n", "sum_ell", "shepp_log_a05", "shepp_log_a06", "shepp_tail_bound_a05"}, {}};
    for (std::size_t i = 0; i < cps.size(); ++i) {
      t.add_row({cps[i], table.sum[cps[i]], s05[i], s06[i], opt(shepp_tail_bound(seq, 0.5, cps[i]))});
    }
    rep.tables.push_back({"partials", std::move(t)});
    rep.checks.push_back({"K_f = [0,1/2] and m_f = 1/2",
                          is_arc(an.K_f, 0.0, 0.5) && std::abs(an.m_f - 0.5) <= 1e-12,
                          "K_f = " + describe_set(an.K_f) + ", m_f = " + format_double(an.m_f)});
    bool grows = true;
    for (std::size_t i = 1; i < s06.size(); ++i) grows = grows && s06[i] > s06[i - 1];
    bool c1 = true;
    for (double a : {0.51, 0.6, 1.0}) c1 = c1 && shepp_classify(seq, a) == Verdict::diverges;
    rep.checks.push_back({"C1 holds: Shepp diverges for a > 1/2, partials at a = 0.6 strictly grow",
                          grows && c1, "classified at a in {0.51, 0.6, 1}"});
    const auto tail = shepp_tail_bound(seq, 0.5, n_prev);
    const double increment = std::exp(s05.back()) - std::exp(s05[s05.size() - 2]);
    rep.checks.push_back({"C2 fails: Shepp at a = m_f converges within its tail bound",
                          shepp_classify(seq, 0.5) == Verdict::converges && tail && increment <= *tail,
                          "P(n) - P(n/10) = " + format_double(increment) +
                              ", tail bound = " + (tail ? format_double(*tail) : "none")});
  }
  return rep;
}

RecipeReport section6_blocks(int k_max, double c) {
  RecipeReport rep;
  rep.recipe = "section6_blocks";
  const LengthSequence A = block_sequence_A(k_max);
  const LengthSequence B = block_sequence_B(k_max, c);
  Table t{{"family", "block", "kind", "log_start", "log_end", "log_value", "c", "s2_ratio_end", "sum_end",
           "ell2_end", "shepp_log_lower_end", "shepp_exact"},
          {}};
  for (const auto* seq : {&A, &B}) {
    for (const BlockInfo& b : seq->schedule()->blocks) {
      t.add_row({std::string(to_string(seq->family())), static_cast<std::uint64_t>(b.index),
                 std::string(b.kind == BlockInfo::Kind::harmonic ? "harmonic" : "constant"), b.log_start,
                 b.log_end, b.log_value, b.c, b.s2_ratio_end, b.sum_end, b.ell2_end, b.shepp_log_lower_end,
                 b.shepp_exact});
    }
  }
  rep.tables.push_back({"blocks", std::move(t)});

  const auto& ablocks = A.schedule()->blocks;
  bool ratio_ok = true;
  bool decreasing = true;
  bool ell2_ok = true;
  CompensatedSum closed;
  std::string ratios;
  for (std::size_t i = 0; i < ablocks.size(); ++i) {
    const auto& b = ablocks[i];
    if (b.index >= 3) {
      ratio_ok = ratio_ok && b.s2_ratio_end >= 0.9 - 1e-9;
      ratios += (ratios.empty() ? "" : ",") + format_double(b.s2_ratio_end);
    }
    if (i > 0) decreasing = decreasing && b.log_value < ablocks[i - 1].log_value;
    closed.add(std::exp(b.log_size + 2.0 * b.log_value));
    ell2_ok = ell2_ok && b.ell2_end <= closed.value() * (1.0 + 1e-9);
  }
  rep.checks.push_back({"blockA: boundary s2 ratio >= 0.9 for k >= 3", ratio_ok,
                        ratios.empty() ? "fewer than 3 blocks" : "ratios " + ratios});
  rep.checks.push_back({"blockA: block values strictly decrease", decreasing, ""});
  rep.checks.push_back({"blockA: sum of l_n^2 bounded by the closed form sum ln^2 n_k / n_k", ell2_ok,
                        "closed form through block " + std::to_string(ablocks.size()) + " = " +
                            format_double(closed.value())});

  bool shepp_ok = true;
  bool any_harmonic = false;
  double max_ratio = 0.0;
  std::string detail;
  for (const auto& b : B.schedule()->blocks) {
    max_ratio = std::max(max_ratio, b.s2_ratio_end);
    if (b.kind != BlockInfo::Kind::harmonic) continue;
    any_harmonic = true;
    const bool ok = b.shepp_log_lower_end > std::log(static_cast<double>(b.index));
    shepp_ok = shepp_ok && ok;
    detail += (detail.empty() ? "" : "; ") + std::string("block ") + std::to_string(b.index) +
              ": log lower bound " + format_double(b.shepp_log_lower_end);
  }
  rep.checks.push_back({"blockB: Shepp partial exceeds k at the end of each harmonic block k",
                        any_harmonic && shepp_ok, any_harmonic ? detail : "no harmonic block"});
  rep.checks.push_back({"blockB: s2 ratio exceeds 0.9 at some boundary", max_ratio > 0.9,
                        "max boundary ratio " + format_double(max_ratio)});
  return rep;
}

// ---------------------------------------------------------------------------
// experiment specs

namespace {

class Params {
 public:
  explicit Params(const ExperimentSpec& spec) : spec_(spec) {}

  std::string str(const std::string& key, const std::string& def) {
    used_.insert(key);
    const auto it = spec_.overrides.find(key);
    return it == spec_.overrides.end() ? def : it->second;
  }
  bool has(const std::string& key) const { return spec_.overrides.count(key) > 0; }
  void finish() const {
    for (const auto& [k, v] : spec_.overrides) {
      if (!used_.count(k)) throw ValidationError("recipe " + spec_.recipe + ": unknown parameter '" + k + "'");
    }
  }

 private:
  const ExperimentSpec& spec_;
  std::set<std::string> used_;
};

struct PhaseParams {
  SweepConfig cfg;
};

PhaseParams parse_phase(const ExperimentSpec& spec) {
  Params p(spec);
  PhaseParams out;
  out.cfg.density = parse_density(p.str("density", "uniform"));
  out.cfg.target = parse_set(p.str("target", "full"));
  out.cfg.c_grid = parse_number_list(p.str("c", "0.3,0.5,0.8"));
  const std::uint64_t n = parse_count(p.str("n", "1e5"));
  out.cfg.n_grid = parse_checkpoints(p.str("checkpoints", "log:1"), n);
  out.cfg.trials = parse_count(p.str("trials", "1024"));
  out.cfg.fit_lo = parse_number(p.str("fit_lo", "1e3"));
  out.cfg.fit_hi = parse_number(p.str("fit_hi", "1e5"));
  out.cfg.seed = spec.seed;
  out.cfg.threads = spec.threads;
  p.finish();
  check_sweep(out.cfg);
  return out;
}

struct CriteriaCase {
  PiecewisePolyDensity f;
  LengthSequence seq;
  std::optional<CoverVerdict> expected;
};

struct CriteriaParams {
  std::vector<CriteriaCase> cases;
  std::vector<double> a;
};

CriteriaParams parse_criteria(const ExperimentSpec& spec) {
  Params p(spec);
  CriteriaParams out;
  out.a = parse_number_list(p.str("a", "0.5,1,2"));
  if (p.has("density") || p.has("seq")) {
    out.cases.push_back({parse_density(p.str("density", "uniform")),
                         parse_sequence(p.str("seq", "harmonic:1.0")), std::nullopt});
  } else {
    out.cases.push_back({step_density(0.5, 1.5, 0.5), LengthSequence::harmonic(2.5), CoverVerdict::covered});
    out.cases.push_back({tent_density(), LengthSequence::power(1.0, 2.0), CoverVerdict::not_covered});
    out.cases.push_back({uniform_density(), LengthSequence::power(0.5, 0.5), CoverVerdict::covered});
    out.cases.push_back({uniform_density(), LengthSequence::power(1.0, 2.0), CoverVerdict::not_covered});
  }
  p.finish();
  return out;
}

struct Section5Params {
  std::vector<Section5Demo> demos;
  std::uint64_t n = 100000;
};

Section5Params parse_section5(const ExperimentSpec& spec) {
  Params p(spec);
  Section5Params out;
  const std::string demo = p.str("demo", "both");
  if (demo == "tent" || demo == "both") out.demos.push_back(Section5Demo::tent_c2_not_c1);
  if (demo == "logharmonic" || demo == "both") out.demos.push_back(Section5Demo::logharmonic_c1_not_c2);
  if (out.demos.empty()) throw ValidationError("section5_c1c2: demo must be tent, logharmonic or both");
  out.n = parse_count(p.str("n", "1e5"));
  if (out.n < 100) throw DomainError("section5_c1c2: n must be at least 100");
  p.finish();
  return out;
}

struct Section6Params {
  int k_max = 5;
  double c = 2.0;
};

Section6Params parse_section6(const ExperimentSpec& spec) {
  Params p(spec);
  Section6Params out;
  out.k_max = static_cast<int>(parse_count(p.str("k_max", "5")));
  out.c = parse_number(p.str("c", "2.0"));
  if (out.k_max < 1 || out.k_max > 12) throw DomainError("section6_blocks: k_max must lie in [1, 12]");
  if (!(out.c > 1.0)) throw DomainError("section6_blocks: c must exceed 1");
  p.finish();
  return out;
}

struct ComparisonParams {
  std::vector<std::pair<std::string, ComparisonConfig>> pairs;
};

ComparisonConfig comparison_base(const LengthSequence& seq, std::vector<std::uint64_t> cps,
                                 std::uint64_t trials, const ExperimentSpec& spec) {
  ComparisonConfig c;
  c.lengths = seq;
  c.checkpoints = std::move(cps);
  c.trials = trials;
  c.seed = spec.seed;
  c.threads = spec.threads;
  return c;
}

ComparisonParams parse_comparison(const ExperimentSpec& spec) {
  Params p(spec);
  ComparisonParams out;
  const LengthSequence seq = parse_sequence(p.str("seq", "harmonic:1.5"));
  const std::uint64_t n = parse_count(p.str("n", "1e4"));
  const auto cps = parse_checkpoints(p.str("checkpoints", "log:2"), n);
  const std::uint64_t trials = parse_count(p.str("trials", "2000"));
  if (p.has("mu") || p.has("nu") || p.has("U") || p.has("K")) {
    ComparisonConfig c = comparison_base(seq, cps, trials, spec);
    c.mu = parse_density(p.str("mu", "uniform"));
    c.nu = parse_density(p.str("nu", "uniform"));
    c.U = parse_set(p.str("U", "arc:0.1:0.4"));
    c.K = parse_set(p.str("K", "arc:0.2:0.3"));
    out.pairs.emplace_back("custom", std::move(c));
  } else {
    struct Def {
      const char* name;
      const char* mu;
      const char* nu;
      const char* U;
      const char* K;
    };
    for (const Def& d : {Def{"uniform<=step", "uniform", "step:1.5:0.5:0.5", "arc:0.1:0.4", "arc:0.2:0.3"},
                         Def{"tent<=uniform", "tent", "uniform", "arc:0.05:0.2", "arc:0.1:0.15"},
                         Def{"step<=uniform", "step:0.5:1.5:0.5", "uniform", "arc:0.1:0.4", "arc:0.2:0.3"}}) {
      ComparisonConfig c = comparison_base(seq, cps, trials, spec);
      c.mu = parse_density(d.mu);
      c.nu = parse_density(d.nu);
      c.U = parse_set(d.U);
      c.K = parse_set(d.K);
      out.pairs.emplace_back(d.name, std::move(c));
    }
  }
  p.finish();
  return out;
}

struct BillardParams {
  std::vector<std::pair<std::string, BillardConfig>> configs;
};

BillardParams parse_billard(const ExperimentSpec& spec) {
  Params p(spec);
  BillardParams out;
  const std::uint64_t trials = parse_count(p.str("trials", "1e4"));
  const auto cps = parse_count_list(p.str("checkpoints", "1e2,1e3,1e4"));
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (cps[i] < 1 || (i > 0 && cps[i] <= cps[i - 1])) {
      throw DomainError("billard: checkpoints must be strictly increasing and >= 1");
    }
  }
  auto make = [&](const std::string& density, const std::string& seq, const std::string& measure,
                  const std::string& carrier) {
    BillardConfig c;
    c.density = parse_density(density);
    c.lengths = parse_sequence(seq);
    c.sigma = parse_measure(measure, parse_set(carrier));
    c.checkpoints = cps;
    c.trials = trials;
    c.seed = spec.seed;
    c.threads = spec.threads;
    return c;
  };
  if (p.has("density") || p.has("seq") || p.has("measure") || p.has("set")) {
    out.configs.emplace_back("custom", make(p.str("density", "uniform"), p.str("seq", "harmonic:0.5"),
                                            p.str("measure", "lebesgue"), p.str("set", "full")));
  } else {
    out.configs.emplace_back("uniform/atom", make("uniform", "harmonic:0.5", "atom:0.3", "full"));
    out.configs.emplace_back("uniform/lebesgue", make("uniform", "harmonic:0.5", "lebesgue", "full"));
    out.configs.emplace_back("step/lebesgue", make("step:0.5:1.5:0.5", "harmonic:0.5", "lebesgue", "arc:0.1:0.4"));
  }
  p.finish();
  return out;
}

RecipeReport run_phase(const PhaseParams& prm) {
  RecipeReport rep;
  rep.recipe = "phase_transition";
  const SweepResult res = phase_transition_sweep(prm.cfg);
  rep.tables.push_back({"cells", res.cells_table()});
  rep.tables.push_back({"fits", res.fits_table()});
  for (const SweepFit& f : res.fits) {
    if (f.source != "exact") continue;
    rep.checks.push_back({"c=" + format_double(f.c) + ": exact slope within 0.05 of -c m_f",
                          std::abs(f.slope - f.predicted) <= 0.05,
                          "slope " + format_double(f.slope) + ", predicted " + format_double(f.predicted)});
  }
  for (const SweepCell& c : res.cells) {
    if (!c.mc_mean || !c.exact) continue;
    rep.checks.push_back({"c=" + format_double(c.c) + ", N=" + std::to_string(c.n) +
                              ": Monte Carlo mean within 3 SE of exact",
                          std::abs(*c.mc_mean - *c.exact) <= 3.0 * *c.mc_se + 1e-15,
                          "mean " + format_double(*c.mc_mean) + ", se " + format_double(*c.mc_se) +
                              ", exact " + format_double(*c.exact)});
  }
  return rep;
}

RecipeReport run_criteria(const CriteriaParams& prm) {
  RecipeReport rep;
  rep.recipe = "criteria_report";
  Table summary{{"density", "lengths", "m_f", "K_f", "dom1", "route", "verdict"}, {}};
  Table detail{{"case", "key", "value"}, {}};
  for (std::size_t i = 0; i < prm.cases.size(); ++i) {
    const auto& cs = prm.cases[i];
    const CriteriaReport r = criteria_report(cs.f, cs.seq, prm.a);
    summary.add_row({r.density, r.lengths, r.m_f, describe_set(r.K_f), std::string(to_string(r.dom1)), r.route,
                     std::string(to_string(r.verdict))});
    for (const auto& row : r.to_table().rows) detail.add_row({static_cast<std::uint64_t>(i), row[0], row[1]});
    if (cs.expected) {
      rep.checks.push_back({r.density + " + " + r.lengths + " -> " + std::string(to_string(*cs.expected)),
                            r.verdict == *cs.expected, "got " + std::string(to_string(r.verdict))});
    }
  }
  rep.tables.push_back({"summary", std::move(summary)});
  rep.tables.push_back({"detail", std::move(detail)});
  return rep;
}

RecipeReport run_comparison(const ComparisonParams& prm) {
  RecipeReport rep;
  rep.recipe = "comparison";
  Table t{{"pair", "n", "p_mu", "se_mu", "p_nu", "se_nu", "se_diff", "ordered"}, {}};
  for (const auto& [name, cfg] : prm.pairs) {
    const ComparisonReport r = comparison_experiment(cfg);
    for (const auto& row : r.rows) {
      t.add_row({name, row.n, row.p_mu, row.se_mu, row.p_nu, row.se_nu, row.se_diff, row.ordered});
    }
    rep.checks.push_back({name + ": P_nu >= P_mu - 2 se at every checkpoint", r.all_ordered, ""});
    rep.checks.push_back({name + ": marked-step coverings agree seed by seed", r.lambda_identical,
                          "alpha1 = " + format_double(r.alpha1)});
  }
  rep.tables.push_back({"rows", std::move(t)});
  return rep;
}

RecipeReport run_billard(const BillardParams& prm) {
  RecipeReport rep;
  rep.recipe = "billard";
  Table t{{"config", "n", "mean", "mean_se", "second", "second_se", "second_closed_form"}, {}};
  for (const auto& [name, cfg] : prm.configs) {
    const auto moments = billard_moments(cfg);
    bool mean_ok = true;
    bool second_ok = true;
    bool has_closed = false;
    for (const auto& m : moments) {
      t.add_row({name, m.n, m.mean, m.mean_se, m.second, m.second_se, opt(m.second_closed_form)});
      mean_ok = mean_ok && std::abs(m.mean - 1.0) <= 3.0 * m.mean_se;
      if (m.second_closed_form) {
        has_closed = true;
        second_ok = second_ok && std::abs(m.second - *m.second_closed_form) <= 3.0 * m.second_se;
      }
    }
    rep.checks.push_back({name + ": E[M_N] = 1 within 3 SE", mean_ok, ""});
    if (has_closed) rep.checks.push_back({name + ": second moment matches the closed form within 3 SE", second_ok, ""});
  }
  rep.tables.push_back({"moments", std::move(t)});
  return rep;
}

}  // namespace

const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> names{"phase_transition", "criteria_report", "section5_c1c2",
                                              "section6_blocks",  "comparison",      "billard"};
  return names;
}

void validate(const ExperimentSpec& spec) {
  if (spec.threads < 1) throw DomainError("threads must be >= 1");
  const std::string& r = spec.recipe;
  if (r == "phase_transition") {
    (void)parse_phase(spec);
  } else if (r == "criteria_report") {
    (void)parse_criteria(spec);
  } else if (r == "section5_c1c2") {
    (void)parse_section5(spec);
  } else if (r == "section6_blocks") {
    (void)parse_section6(spec);
  } else if (r == "comparison") {
    (void)parse_comparison(spec);
  } else if (r == "billard") {
    (void)parse_billard(spec);
  } else {
    throw ValidationError("unknown recipe '" + r + "'");
  }
}

RecipeReport run_experiment(const ExperimentSpec& spec) {
  validate(spec);
  const std::string& r = spec.recipe;
  if (r == "phase_transition") return run_phase(parse_phase(spec));
  if (r == "criteria_report") return run_criteria(parse_criteria(spec));
  if (r == "section5_c1c2") {
    const Section5Params prm = parse_section5(spec);
    RecipeReport all;
    all.recipe = "section5_c1c2";
    for (Section5Demo d : prm.demos) {
      RecipeReport one = section5_c1c2(d, prm.n);
      for (auto& t : one.tables) all.tables.push_back({one.recipe.substr(one.recipe.find('/') + 1), std::move(t.table)});
      for (auto& c : one.checks) all.checks.push_back(std::move(c));
    }
    return all;
  }
  if (r == "section6_blocks") {
    const Section6Params prm = parse_section6(spec);
    return section6_blocks(prm.k_max, prm.c);
  }
  if (r == "comparison") return run_comparison(parse_comparison(spec));
  return run_billard(parse_billard(spec));
}

}  // namespace dvcover
