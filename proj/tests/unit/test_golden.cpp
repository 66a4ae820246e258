#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dvcover/config.hpp"
#include "dvcover/harness.hpp"

using namespace dvcover;

namespace {

struct GoldenRow {
  std::string density;
  std::string lengths;
  std::string route;
  std::string verdict;
};

std::vector<GoldenRow> load_golden() {
  std::ifstream in(std::string(DVCOVER_TEST_DATA) + "/criteria_golden.csv");
  std::vector<GoldenRow> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    GoldenRow r;
    std::getline(ss, r.density, ',');
    std::getline(ss, r.lengths, ',');
    std::getline(ss, r.route, ',');
    std::getline(ss, r.verdict, ',');
    rows.push_back(r);
  }
  return rows;
}

// The case analysis rebuilt from the underlying module outputs.
CoverVerdict compose(const PiecewisePolyDensity& f, const LengthSequence& seq) {
  const DensityAnalysis an = analyze(f);
  if (seq.family() == Family::harmonic) {
    return seq.p0() * an.m_f >= 1.0 ? CoverVerdict::covered : CoverVerdict::not_covered;
  }
  for (const Piece& p : f.pieces()) {
    if (p.is_constant() && p.v_lo == an.m_f) {
      return shepp_classify(seq, an.m_f) == Verdict::diverges ? CoverVerdict::covered : CoverVerdict::not_covered;
    }
  }
  if (an.dom1_holds != TriState::yes) return CoverVerdict::hypotheses_unmet;
  // positive infimum with a finite K_f: C1 just above m_f; C2 fails when a flat point of K_f
  // has positive capacity, which for a single point means sum l_n < infinity
  if (shepp_classify(seq, an.m_f * (1.0 + 1e-6)) != Verdict::diverges) return CoverVerdict::not_covered;
  const std::vector<std::uint64_t> cps{1000};
  for (const Arc& k : an.K_f.arcs()) {
    const FlatnessReport fr = flatness_partial(f, an, k.start, seq, cps);
    if (fr.classification == Verdict::converges && ell1_classify(seq) != Verdict::diverges) {
      return CoverVerdict::not_covered;
    }
  }
  return CoverVerdict::covered;
}

}  // namespace

TEST_SUITE("golden") {
  TEST_CASE("criteria verdicts for four densities and four length families") {
    const auto rows = load_golden();
    REQUIRE(rows.size() == 16);
    const std::vector<double> as{0.5, 1.0, 2.0};
    for (const GoldenRow& g : rows) {
      INFO(g.density << " / " << g.lengths);
      const PiecewisePolyDensity f = parse_density(g.density);
      const LengthSequence seq = parse_sequence(g.lengths);
      const CriteriaReport r = criteria_report(f, seq, as);
      CHECK(r.route == g.route);
      CHECK(std::string(to_string(r.verdict)) == g.verdict);
      CHECK(r.verdict == compose(f, seq));
      CHECK(r.m_f == f.ess_inf());
      CHECK(r.ell1 == ell1_classify(seq));
      CHECK(r.ell2 == ell2_classify(seq));
      REQUIRE(r.shepp.size() == as.size());
      for (std::size_t i = 0; i < as.size(); ++i) CHECK(r.shepp[i] == shepp_classify(seq, as[i]));
    }
  }
}
