#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "dvcover/arc_set.hpp"
#include "dvcover/capacity.hpp"
#include "dvcover/coversim.hpp"
#include "dvcover/density.hpp"
#include "dvcover/sequences.hpp"

namespace dvcover {

/// One flattened key of a TOML/JSON config; arrays become several values.
struct ConfigEntry {
  std::vector<std::string> section;
  std::string key;
  std::vector<std::string> values;
};

/// JSON when the first non-blank character is '{', TOML otherwise.
std::vector<ConfigEntry> read_config(std::istream& in);
std::vector<ConfigEntry> read_config_file(const std::string& path);

/// `{ pieces = [ { from = 0.0, to = 0.5, poly = [0.5] }, ... ] }` in TOML or JSON.
PiecewisePolyDensity load_density_file(const std::string& path);

/// uniform | tent | step:<lo>:<hi>:<split> | fatcantor:<depth> | file:<path>
PiecewisePolyDensity parse_density(std::string_view spec);
/// harmonic:c | power:a:t | const:l | logharmonic | blockA:k | blockB:k:c | file:<path>
LengthSequence parse_sequence(std::string_view spec);
/// full | empty | comma-separated items arc:<lo>:<hi> (wrapping when hi < lo) and point:<x>
ArcSet parse_set(std::string_view spec);
/// Set spec, or grid:<count>[:<lo>:<hi>] / points:<x1>:<x2>:... for finite point targets.
Target parse_target(std::string_view spec);
/// lebesgue | atoms | atom:<x> | grid:<cells>, relative to the carrier set.
SupportMeasure parse_measure(std::string_view spec, const ArcSet& carrier);
/// log:<per_decade> up to n_max, or a comma-separated list such as 1e3,1e4.
std::vector<std::uint64_t> parse_checkpoints(std::string_view spec, std::uint64_t n_max);
std::vector<double> parse_number_list(std::string_view spec);
std::vector<std::uint64_t> parse_count_list(std::string_view spec);
/// Accepts integer or scientific notation (1e6) with an exact integral value.
std::uint64_t parse_count(std::string_view text);
double parse_number(std::string_view text);

}  // namespace dvcover
