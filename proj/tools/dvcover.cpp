#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dvcover/capacity.hpp"
#include "dvcover/config.hpp"
#include "dvcover/coversim.hpp"
#include "dvcover/density.hpp"
#include "dvcover/errors.hpp"
#include "dvcover/harness.hpp"
#include "dvcover/sequences.hpp"

using namespace dvcover;

namespace {

// TOML or JSON config; tables name subcommands, keys name long flags.
class FileConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    std::vector<CLI::ConfigItem> out;
    for (auto& e : read_config(in)) {
      CLI::ConfigItem item;
      item.parents = e.section;
      item.name = e.key;
      for (char& ch : item.name) {
        if (ch == '_') ch = '-';
      }
      // list flags take one comma-separated string
      std::string joined;
      for (const auto& v : e.values) joined += (joined.empty() ? "" : ",") + v;
      item.inputs = {joined};
      out.push_back(std::move(item));
    }
    return out;
  }
};

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
  std::string format = "csv";
};

std::string sibling_path(const std::string& path, const std::string& name) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + "." + name;
  return path.substr(0, dot) + "." + name + path.substr(dot);
}

void write_tables(const Globals& g, const std::vector<NamedTable>& tables) {
  const Format fmt = parse_format(g.format);
  if (g.out.empty()) {
    for (const auto& t : tables) {
      if (tables.size() > 1) std::cout << "# " << t.name << '\n';
      emit(t.table, fmt, std::cout);
    }
    return;
  }
  for (std::size_t i = 0; i < tables.size(); ++i) {
    emit(tables[i].table, fmt, i == 0 ? g.out : sibling_path(g.out, tables[i].name));
  }
}

std::string verdict_text(Verdict v) { return std::string(to_string(v)); }

int cmd_density(const Globals& g, const std::string& density_spec, const std::string& seq_spec,
                const std::string& xs, const std::string& cps_spec) {
  const PiecewisePolyDensity f = parse_density(density_spec);
  const DensityAnalysis an = analyze(f);
  Table t{{"key", "value"}, {}};
  t.add_row({std::string("density"), f.name()});
  t.add_row({std::string("pieces"), static_cast<std::uint64_t>(f.pieces().size())});
  t.add_row({std::string("m_f"), an.m_f});
  t.add_row({std::string("ess_sup"), f.ess_sup()});
  std::string kf;
  for (const Arc& a : an.K_f.arcs()) {
    std::ostringstream os;
    os << (kf.empty() ? "" : ",") << "[" << a.start << "," << wrap01(a.end()) << "]";
    kf += os.str();
  }
  t.add_row({std::string("K_f"), kf});
  t.add_row({std::string("dom1"), std::string(to_string(an.dom1_holds))});
  for (const auto& w : an.warnings) t.add_row({std::string("warning"), w});
  for (const auto& c : f.caveats()) t.add_row({std::string("caveat"), c});
  std::vector<NamedTable> tables{{"analysis", std::move(t)}};
  if (!seq_spec.empty()) {
    const LengthSequence seq = parse_sequence(seq_spec);
    std::vector<double> points;
    if (!xs.empty()) {
      points = parse_number_list(xs);
    } else {
      for (const Arc& a : an.K_f.arcs()) points.push_back(a.start);
    }
    const auto cps = parse_checkpoints(cps_spec, seq.horizon().value_or(100000));
    Table fl{{"x", "n", "partial_sum", "classification", "rationale"}, {}};
    for (double x : points) {
      const FlatnessReport r = flatness_partial(f, an, x, seq, cps);
      for (std::size_t i = 0; i < r.checkpoints.size(); ++i) {
        fl.add_row({x, r.checkpoints[i], r.partial_sums[i], verdict_text(r.classification), r.rationale});
      }
    }
    tables.push_back({"flatness", std::move(fl)});
  }
  write_tables(g, tables);
  return 0;
}

int cmd_seq(const Globals& g, const std::string& seq_spec, std::uint64_t n, const std::string& a_spec,
            const std::string& cps_spec) {
  const LengthSequence seq = parse_sequence(seq_spec);
  const std::vector<double> a = a_spec.empty() ? std::vector<double>{} : parse_number_list(a_spec);
  const auto cps = parse_checkpoints(cps_spec, n);
  const SeriesDiagnostics d = diagnose(seq, cps, a);
  Table t{{"n", "ell_n", "sum_ell", "sum_ell2", "s2_ratio"}, {}};
  for (double av : a) {
    std::ostringstream os;
    os << "shepp_log_a" << av;
    t.columns.push_back(os.str());
  }
  for (std::size_t i = 0; i < d.checkpoints.size(); ++i) {
    std::vector<Cell> row{d.checkpoints[i], seq(d.checkpoints[i]), d.sum_ell[i], d.sum_ell2[i], d.s2_ratio[i]};
    for (std::size_t k = 0; k < a.size(); ++k) row.emplace_back(d.shepp_log[k][i]);
    t.add_row(std::move(row));
  }
  Table v{{"series", "verdict"}, {}};
  v.add_row({std::string("sum_ell"), verdict_text(d.ell1)});
  v.add_row({std::string("sum_ell2"), verdict_text(d.ell2)});
  for (std::size_t k = 0; k < a.size(); ++k) {
    std::ostringstream os;
    os << "shepp(a=" << a[k] << ")";
    v.add_row({os.str(), verdict_text(d.shepp[k])});
  }
  write_tables(g, {{"partials", std::move(t)}, {"verdicts", std::move(v)}});
  return 0;
}

int cmd_capacity(const Globals& g, const std::string& seq_spec, double a, const std::string& set_spec,
                 const std::string& measure_spec, const std::string& trunc_spec, bool heuristic) {
  const LengthSequence seq = parse_sequence(seq_spec);
  const ArcSet F = parse_set(set_spec);
  if (F.empty()) throw DomainError("capacity: set is empty");
  const auto truncs = parse_count_list(trunc_spec);
  std::vector<NamedTable> tables;
  bool inconclusive = false;
  if (heuristic) {
    const CapacityReport r = cap_zero_heuristic(a, seq, F, truncs);
    Table t{{"measure", "truncation", "energy_log", "verdict"}, {}};
    for (std::size_t m = 0; m < r.measures.size(); ++m) {
      for (std::size_t k = 0; k < truncs.size() && k < r.energy_log[m].size(); ++k) {
        t.add_row({r.measures[m], truncs[k], r.energy_log[m][k], verdict_text(r.verdicts[m].verdict)});
      }
    }
    Table s{{"key", "value"}, {}};
    s.add_row({std::string("outcome"), std::string(to_string(r.outcome))});
    s.add_row({std::string("witness"), r.witness.value_or("")});
    s.add_row({std::string("caveat"), r.caveat});
    tables.push_back({"energies", std::move(t)});
    tables.push_back({"summary", std::move(s)});
    inconclusive = r.outcome == CapacityReport::Outcome::inconclusive;
  } else {
    const SupportMeasure sigma = parse_measure(measure_spec, F);
    const auto est = energy_ladder(a, seq, sigma, truncs);
    Table t{{"truncation", "energy_log", "lower_log", "upper_log", "verdict"}, {}};
    std::vector<double> logs;
    for (const auto& e : est) {
      logs.push_back(e.log_value);
      const LadderVerdict lv = classify_ladder(logs);
      Cell lo = e.lower_log ? Cell(*e.lower_log) : Cell(std::monostate{});
      Cell hi = e.upper_log ? Cell(*e.upper_log) : Cell(std::monostate{});
      t.add_row({e.truncation, e.infinite ? Cell(std::monostate{}) : Cell(e.log_value), lo, hi,
                 verdict_text(lv.verdict)});
      inconclusive = inconclusive || e.inconclusive;
    }
    tables.push_back({"energy", std::move(t)});
  }
  write_tables(g, tables);
  if (inconclusive) {
    std::cerr << "capacity: result is inconclusive\n";
    return 3;
  }
  return 0;
}

int cmd_sim(const Globals& g, const std::string& density_spec, const std::string& seq_spec, std::uint64_t n,
            std::uint64_t trials, const std::string& target_spec, const std::string& cps_spec) {
  TrialConfig cfg;
  cfg.density = parse_density(density_spec);
  cfg.lengths = parse_sequence(seq_spec);
  cfg.n_max = n;
  cfg.target = parse_target(target_spec);
  cfg.seed = g.seed;
  cfg.checkpoints = parse_checkpoints(cps_spec, n);
  if (g.threads < 1) throw DomainError("threads must be >= 1");
  const auto results = run_trials(cfg, trials, g.threads);
  const Format fmt = parse_format(g.format);
  if (fmt == Format::jsonl) {
    if (g.out.empty()) {
      write_trials_jsonl(results, std::cout);
    } else {
      std::ofstream out(g.out, std::ios::binary | std::ios::trunc);
      if (!out) throw ValidationError("cannot write " + g.out);
      write_trials_jsonl(results, out);
    }
  } else {
    write_tables(g, {{"trials", trials_table(results)}});
  }
  return 0;
}

int cmd_sweep(const Globals& g, const std::string& density_spec, const std::string& target_spec,
              const std::string& c_spec, std::uint64_t n, const std::string& cps_spec, std::uint64_t trials,
              double fit_lo, double fit_hi, bool no_exact) {
  SweepConfig cfg;
  cfg.density = parse_density(density_spec);
  cfg.target = parse_set(target_spec);
  cfg.c_grid = parse_number_list(c_spec);
  cfg.n_grid = parse_checkpoints(cps_spec, n);
  cfg.trials = trials;
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  cfg.fit_lo = fit_lo;
  cfg.fit_hi = fit_hi;
  cfg.exact = !no_exact;
  const SweepResult r = phase_transition_sweep(cfg);
  write_tables(g, {{"cells", r.cells_table()}, {"fits", r.fits_table()}});
  return 0;
}

int cmd_criteria(const Globals& g, const std::string& density_spec, const std::string& seq_spec,
                 const std::string& a_spec) {
  const auto f = parse_density(density_spec);
  const auto seq = parse_sequence(seq_spec);
  const auto a = parse_number_list(a_spec);
  const CriteriaReport r = criteria_report(f, seq, a);
  write_tables(g, {{"criteria", r.to_table()}});
  return r.verdict == CoverVerdict::inconclusive ? 3 : 0;
}

int cmd_repro(const Globals& g, const std::string& recipe, const std::vector<std::string>& params) {
  ExperimentSpec spec;
  spec.recipe = recipe;
  spec.seed = g.seed;
  spec.threads = g.threads;
  for (const auto& p : params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("parameter must be key=value: '" + p + "'");
    spec.overrides[p.substr(0, eq)] = p.substr(eq + 1);
  }
  const RecipeReport r = run_experiment(spec);
  write_tables(g, r.tables);
  for (const Check& c : r.checks) {
    std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) std::cerr << " (" << c.detail << ")";
    std::cerr << '\n';
  }
  return r.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random covering of the circle by intervals with non-uniform centres"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<FileConfig>());
  app.set_config("--config", "", "TOML or JSON file mirroring the flags");

  Globals g;
  app.add_option("--seed", g.seed, "Base seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str();
  app.add_option("--out", g.out, "Output path (stdout when empty)");
  app.add_option("--format", g.format, "csv or jsonl")->capture_default_str();

  std::string density = "uniform";
  std::string seq = "harmonic:1.0";
  std::string xs;
  std::string cps = "log:8";
  std::string a_list;
  std::string n = "1e5";
  double a = 1.0;
  std::string set = "full";
  std::string measure = "lebesgue";
  std::string truncations = "1e3,1e4,1e5";
  bool heuristic = false;
  std::string trials = "16";
  std::string target = "full";
  std::string c_grid = "0.3,0.5,0.8";
  double fit_lo = 1e3;
  double fit_hi = 1e5;
  bool no_exact = false;
  std::string recipe;
  std::vector<std::string> params;
  std::string seq_opt;

  auto* c_density = app.add_subcommand("density", "Analyse a density");
  c_density->add_option("--density", density)->capture_default_str();
  c_density->add_option("--seq", seq_opt, "Lengths for flatness diagnostics");
  c_density->add_option("--x", xs, "Comma-separated points for flatness (default: K_f)");
  c_density->add_option("--checkpoints", cps)->capture_default_str();

  auto* c_seq = app.add_subcommand("seq", "Series diagnostics for a length sequence");
  c_seq->add_option("--seq", seq)->capture_default_str();
  c_seq->add_option("--n", n)->capture_default_str();
  c_seq->add_option("--a", a_list, "Comma-separated Shepp intensities");
  c_seq->add_option("--checkpoints", cps)->capture_default_str();

  auto* c_cap = app.add_subcommand("capacity", "Energy ladder for the kernel Phi^(a)");
  c_cap->add_option("--seq", seq)->capture_default_str();
  c_cap->add_option("--a", a)->capture_default_str();
  c_cap->add_option("--set", set)->capture_default_str();
  c_cap->add_option("--measure", measure)->capture_default_str();
  c_cap->add_option("--truncations", truncations)->capture_default_str();
  c_cap->add_flag("--heuristic", heuristic, "Search candidate measures for a finite-energy witness");

  auto* c_sim = app.add_subcommand("sim", "Monte Carlo covering trials");
  c_sim->add_option("--density", density)->capture_default_str();
  c_sim->add_option("--seq", seq)->capture_default_str();
  c_sim->add_option("--n", n)->capture_default_str();
  c_sim->add_option("--trials", trials)->capture_default_str();
  c_sim->add_option("--target", target)->capture_default_str();
  c_sim->add_option("--checkpoints", cps)->capture_default_str();

  auto* c_sweep = app.add_subcommand("sweep", "Phase transition sweep over l_n = c/n");
  c_sweep->add_option("--density", density)->capture_default_str();
  c_sweep->add_option("--target", target)->capture_default_str();
  c_sweep->add_option("--c", c_grid)->capture_default_str();
  c_sweep->add_option("--n", n)->capture_default_str();
  c_sweep->add_option("--checkpoints", cps)->capture_default_str();
  c_sweep->add_option("--trials", trials)->capture_default_str();
  c_sweep->add_option("--fit-lo", fit_lo)->capture_default_str();
  c_sweep->add_option("--fit-hi", fit_hi)->capture_default_str();
  c_sweep->add_flag("--no-exact", no_exact, "Skip the quadrature oracle");

  auto* c_crit = app.add_subcommand("criteria", "Covering criteria report");
  c_crit->add_option("--density", density)->capture_default_str();
  c_crit->add_option("--seq", seq)->capture_default_str();
  c_crit->add_option("--a", a_list, "Comma-separated Shepp intensities");

  auto* c_repro = app.add_subcommand("repro", "Run a named experiment recipe");
  c_repro->add_option("recipe", recipe, "phase_transition | criteria_report | section5_c1c2 | "
                                        "section6_blocks | comparison | billard")
      ->required();
  c_repro->add_option("--param", params, "Recipe override key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (g.threads < 1) throw DomainError("threads must be >= 1");
    if (c_density->parsed()) return cmd_density(g, density, seq_opt, xs, cps);
    if (c_seq->parsed()) return cmd_seq(g, seq, parse_count(n), a_list, cps);
    if (c_cap->parsed()) return cmd_capacity(g, seq, a, set, measure, truncations, heuristic);
    if (c_sim->parsed()) return cmd_sim(g, density, seq, parse_count(n), parse_count(trials), target, cps);
    if (c_sweep->parsed()) {
      return cmd_sweep(g, density, target, c_grid, parse_count(n), cps, parse_count(trials), fit_lo, fit_hi,
                       no_exact);
    }
    if (c_crit->parsed()) return cmd_criteria(g, density, seq, a_list.empty() ? "0.5,1,2" : a_list);
    if (c_repro->parsed()) return cmd_repro(g, recipe, params);
  } catch (const InconclusiveError& e) {
    std::cerr << "inconclusive: " << e.what() << '\n';
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
