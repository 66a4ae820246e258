#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dvcover/errors.hpp"
#include "dvcover/harness.hpp"

using namespace dvcover;

namespace {

std::string to_csv(const Table& t) {
  std::ostringstream os;
  emit(t, Format::csv, os);
  return os.str();
}

std::string to_jsonl(const Table& t) {
  std::ostringstream os;
  emit(t, Format::jsonl, os);
  return os.str();
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("empty sweep is a header-only csv") {
    SweepConfig cfg;
    const SweepResult r = phase_transition_sweep(cfg);
    CHECK(r.cells.empty());
    CHECK(to_csv(r.cells_table()) == "c,n,mc_mean,mc_se,exact,trials,seed_first,seed_last,cover_fraction\n");
    CHECK(to_jsonl(r.cells_table()).empty());
  }

  TEST_CASE("single-cell sweep records its seed range") {
    SweepConfig cfg;
    cfg.c_grid = {0.5};
    cfg.n_grid = {100};
    cfg.trials = 8;
    cfg.seed = 40;
    cfg.exact = false;
    const SweepResult r = phase_transition_sweep(cfg);
    REQUIRE(r.cells.size() == 1);
    const std::string csv = to_csv(r.cells_table());
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    CHECK(r.cells[0].seed_first == 40);
    CHECK(r.cells[0].seed_last == 47);
    CHECK(r.cells[0].trials == 8);
    CHECK(r.cells[0].mc_mean.has_value());
    CHECK_FALSE(r.cells[0].exact.has_value());
  }

  TEST_CASE("seed ranges of successive c values do not overlap") {
    SweepConfig cfg;
    cfg.c_grid = {0.3, 0.5};
    cfg.n_grid = {10, 100};
    cfg.trials = 4;
    cfg.exact = false;
    const SweepResult r = phase_transition_sweep(cfg);
    REQUIRE(r.cells.size() == 4);
    CHECK(r.cells[2].seed_first == r.cells[0].seed_last + 1);
  }

  TEST_CASE("uniform sweep fits slope -c from the exact product") {
    SweepConfig cfg;
    cfg.c_grid = {0.5};
    cfg.n_grid = {4, 1000};
    const SweepResult r = phase_transition_sweep(cfg);
    CHECK(*r.cells[0].exact == doctest::Approx(0.2734375).epsilon(1e-15));
    REQUIRE(r.fits.size() == 1);
    CHECK(r.fits[0].source == "exact");
    CHECK(std::abs(r.fits[0].slope + 0.5) < 0.05);
    CHECK(r.fits[0].predicted == -0.5);
    CHECK_THROWS_AS(phase_transition_sweep(SweepConfig{.c_grid = {-1.0}}), DomainError);
  }

  TEST_CASE("csv formatting: shortest doubles, escaping, empty optionals") {
    Table t{{"a", "b", "c", "d"}, {}};
    t.add_row({0.1, std::string("x,y"), std::monostate{}, true});
    t.add_row({std::uint64_t{7}, std::string("q\"r"), std::numeric_limits<double>::infinity(), false});
    CHECK(to_csv(t) == "a,b,c,d\n0.1,\"x,y\",,true\n7,\"q\"\"r\",,false\n");
    CHECK_THROWS_AS(t.add_row({1.0}), ValidationError);
  }

  TEST_CASE("jsonl round-trips through the companion reader") {
    Table t{{"name", "n", "x", "flag", "missing"}, {}};
    t.add_row({std::string("a"), std::uint64_t{3}, 0.25, true, std::monostate{}});
    t.add_row({std::string("b"), std::uint64_t{4}, -1e-300, false, std::monostate{}});
    const std::string text = to_jsonl(t);
    CHECK(text.substr(0, text.find('\n')) == R"({"name":"a","n":3,"x":0.25,"flag":true,"missing":null})");
    std::istringstream in(text);
    CHECK(read_jsonl(in) == t);
    std::istringstream bad("{\"a\":1}\n{\"b\":2}\n");
    CHECK_THROWS_AS(read_jsonl(bad), ValidationError);
  }

  TEST_CASE("trial records round-trip") {
    TrialConfig cfg;
    cfg.lengths = LengthSequence::harmonic(1.2);
    cfg.n_max = 500;
    cfg.checkpoints = {10, 500};
    cfg.target = PointTarget{{0.1, 0.6}};
    const auto trials = run_trials(cfg, 5);
    std::ostringstream os;
    write_trials_jsonl(trials, os);
    std::istringstream in(os.str());
    CHECK(read_trials_jsonl(in) == trials);
    CHECK(trials_table(trials).rows.size() == 10);
  }

  TEST_CASE("emit to an unwritable path") {
    Table t{{"a"}, {}};
    CHECK_THROWS_AS(emit(t, Format::csv, std::string("/nonexistent-dir/x.csv")), ValidationError);
    const auto path = std::filesystem::temp_directory_path() / "dvcover_emit_test.csv";
    emit(t, Format::csv, path.string());
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "a");
    std::filesystem::remove(path);
    CHECK_THROWS_AS(parse_format("xml"), ValidationError);
  }

  TEST_CASE("criteria report: documented cases") {
    const std::vector<double> as{0.5, 1.0};
    const CriteriaReport step = criteria_report(step_density(0.5, 1.5, 0.5), LengthSequence::harmonic(2.5), as);
    CHECK(step.verdict == CoverVerdict::covered);
    CHECK(step.route == "harmonic_threshold");
    const CriteriaReport tent = criteria_report(tent_density(), LengthSequence::power(1.0, 2.0), as);
    CHECK(tent.verdict == CoverVerdict::not_covered);
    REQUIRE_FALSE(tent.point_series.empty());
    CHECK(tent.point_series[0].classification == Verdict::converges);
    const CriteriaReport uni = criteria_report(uniform_density(), LengthSequence::power(0.5, 0.5), as);
    CHECK(uni.verdict == CoverVerdict::covered);
    CHECK(uni.shepp_at_mf == shepp_classify(LengthSequence::power(0.5, 0.5), 1.0));
    CHECK_FALSE(uni.trace.empty());
    const Table t = uni.to_table();
    CHECK(t.columns == std::vector<std::string>{"key", "value"});
  }

  TEST_CASE("criteria report refuses fat-cantor hypotheses it cannot confirm") {
    const std::vector<double> as{1.0};
    const CriteriaReport r = criteria_report(fat_cantor_density(2), LengthSequence::harmonic(5.0), as);
    CHECK(r.route == "harmonic_threshold");
    CHECK(to_string(CoverVerdict::hypotheses_unmet) == "hypotheses-unmet");
    CHECK(to_string(CoverVerdict::not_covered) == "not-covered");
  }

  TEST_CASE("C1 and C2 independence demos and block schedules") {
    const RecipeReport tent = section5_c1c2(Section5Demo::tent_c2_not_c1, 10000);
    CHECK(tent.all_passed());
    const RecipeReport lh = section5_c1c2(Section5Demo::logharmonic_c1_not_c2, 10000);
    CHECK(lh.all_passed());
    const RecipeReport blocks = section6_blocks(5);
    for (const Check& c : blocks.checks) {
      INFO(c.name << ": " << c.detail);
      CHECK(c.passed);
    }
    CHECK(blocks.checks_table().rows.size() == blocks.checks.size());
  }

  TEST_CASE("experiment specs are validated before compute") {
    CHECK(recipe_names().size() == 6);
    CHECK_THROWS_AS(validate({.recipe = "nope"}), ValidationError);
    CHECK_THROWS_AS(validate({.recipe = "phase_transition", .overrides = {{"colour", "red"}}}), ValidationError);
    CHECK_THROWS_AS(validate({.recipe = "phase_transition", .overrides = {{"c", "-1"}}}), ValidationError);
    CHECK_THROWS_AS(validate({.recipe = "section6_blocks", .overrides = {{"k_max", "13"}}}), ValidationError);
    CHECK_NOTHROW(validate({.recipe = "comparison"}));
  }

  TEST_CASE("recipes are reproducible") {
    const ExperimentSpec spec{.recipe = "phase_transition",
                              .overrides = {{"c", "0.5"}, {"n", "1e3"}, {"trials", "16"}, {"fit_lo", "10"},
                                            {"fit_hi", "1e3"}},
                              .seed = 3,
                              .threads = 1};
    const RecipeReport a = run_experiment(spec);
    ExperimentSpec threaded = spec;
    threaded.threads = 4;
    const RecipeReport b = run_experiment(threaded);
    REQUIRE(a.tables.size() == b.tables.size());
    for (std::size_t i = 0; i < a.tables.size(); ++i) CHECK(to_jsonl(a.tables[i].table) == to_jsonl(b.tables[i].table));
  }
}
