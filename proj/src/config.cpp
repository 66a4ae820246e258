#include "dvcover/config.hpp"

#include <toml.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>

#include "dvcover/errors.hpp"

namespace dvcover {

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    out.emplace_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string toml_scalar(const toml::node& node) {
  if (auto v = node.value<bool>(); v && node.is_boolean()) return *v ? "true" : "false";
  if (node.is_integer()) return std::to_string(*node.value<std::int64_t>());
  if (node.is_floating_point()) return format_double(*node.value<double>());
  if (node.is_string()) return *node.value<std::string>();
  throw ValidationError("config: unsupported TOML value");
}

void flatten_toml(const toml::table& table, std::vector<std::string>& section,
                  std::vector<ConfigEntry>& out) {
  for (const auto& [key, node] : table) {
    const std::string k(key.str());
    if (const auto* sub = node.as_table()) {
      section.push_back(k);
      flatten_toml(*sub, section, out);
      section.pop_back();
    } else if (const auto* arr = node.as_array()) {
      ConfigEntry e{section, k, {}};
      for (const auto& item : *arr) e.values.push_back(toml_scalar(item));
      out.push_back(std::move(e));
    } else {
      out.push_back(ConfigEntry{section, k, {toml_scalar(node)}});
    }
  }
}

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  throw ValidationError("config: unsupported JSON value");
}

void flatten_json(const nlohmann::json& obj, std::vector<std::string>& section,
                  std::vector<ConfigEntry>& out) {
  for (const auto& [key, v] : obj.items()) {
    if (v.is_object()) {
      section.push_back(key);
      flatten_json(v, section, out);
      section.pop_back();
    } else if (v.is_array()) {
      ConfigEntry e{section, key, {}};
      for (const auto& item : v) e.values.push_back(json_scalar(item));
      out.push_back(std::move(e));
    } else {
      out.push_back(ConfigEntry{section, key, {json_scalar(v)}});
    }
  }
}

bool looks_like_json(std::string_view text) {
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    return ch == '{';
  }
  return false;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<RawPiece> pieces_from_json(const nlohmann::json& doc) {
  if (!doc.contains("pieces") || !doc["pieces"].is_array()) {
    throw ValidationError("density file: missing pieces array");
  }
  std::vector<RawPiece> out;
  for (const auto& p : doc["pieces"]) {
    RawPiece r;
    r.from = p.at("from").get<double>();
    r.to = p.at("to").get<double>();
    r.poly = p.at("poly").get<std::vector<double>>();
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RawPiece> pieces_from_toml(const toml::table& doc) {
  const auto* arr = doc["pieces"].as_array();
  if (!arr) throw ValidationError("density file: missing pieces array");
  std::vector<RawPiece> out;
  for (const auto& node : *arr) {
    const auto* t = node.as_table();
    if (!t) throw ValidationError("density file: each piece must be a table");
    RawPiece r;
    const auto from = (*t)["from"].value<double>();
    const auto to = (*t)["to"].value<double>();
    const auto* poly = (*t)["poly"].as_array();
    if (!from || !to || !poly) throw ValidationError("density file: piece needs from, to and poly");
    r.from = *from;
    r.to = *to;
    for (const auto& c : *poly) {
      const auto v = c.value<double>();
      if (!v) throw ValidationError("density file: poly coefficients must be numbers");
      r.poly.push_back(*v);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string_view after_prefix(std::string_view spec, std::string_view prefix) {
  return spec.substr(prefix.size());
}

void expect_fields(const std::vector<std::string>& f, std::size_t n, std::string_view spec) {
  if (f.size() != n) throw ValidationError("malformed spec '" + std::string(spec) + "'");
}

}  // namespace

std::vector<ConfigEntry> read_config(std::istream& in) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::vector<ConfigEntry> out;
  std::vector<std::string> section;
  if (looks_like_json(text)) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("config: ") + e.what());
    }
    flatten_json(doc, section, out);
  } else {
    try {
      const toml::table doc = toml::parse(text);
      flatten_toml(doc, section, out);
    } catch (const toml::parse_error& e) {
      throw ValidationError(std::string("config: ") + std::string(e.description()));
    }
  }
  return out;
}

std::vector<ConfigEntry> read_config_file(const std::string& path) {
  std::istringstream in(slurp(path));
  return read_config(in);
}

PiecewisePolyDensity load_density_file(const std::string& path) {
  const std::string text = slurp(path);
  std::vector<RawPiece> raw;
  if (looks_like_json(text)) {
    try {
      raw = pieces_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("density file: ") + e.what());
    }
  } else {
    try {
      raw = pieces_from_toml(toml::parse(text));
    } catch (const toml::parse_error& e) {
      throw ValidationError(std::string("density file: ") + std::string(e.description()));
    }
  }
  return PiecewisePolyDensity::from_raw(raw, "file:" + path);
}

double parse_number(std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ValidationError("not a number: '" + t + "'");
  }
  return v;
}

std::uint64_t parse_count(std::string_view text) {
  const double v = parse_number(text);
  if (!(v >= 0.0) || v > 9.007199254740992e15 || std::floor(v) != v) {
    throw ValidationError("not a nonnegative integer: '" + std::string(text) + "'");
  }
  return static_cast<std::uint64_t>(v);
}

std::vector<double> parse_number_list(std::string_view spec) {
  std::vector<double> out;
  for (const auto& item : split(spec, ',')) out.push_back(parse_number(item));
  return out;
}

std::vector<std::uint64_t> parse_count_list(std::string_view spec) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split(spec, ',')) out.push_back(parse_count(item));
  return out;
}

PiecewisePolyDensity parse_density(std::string_view spec) {
  if (spec.starts_with("file:")) return load_density_file(std::string(after_prefix(spec, "file:")));
  const auto f = split(spec, ':');
  if (f[0] == "uniform") {
    expect_fields(f, 1, spec);
    return uniform_density();
  }
  if (f[0] == "tent") {
    expect_fields(f, 1, spec);
    return tent_density();
  }
  if (f[0] == "step") {
    expect_fields(f, 4, spec);
    return step_density(parse_number(f[1]), parse_number(f[2]), parse_number(f[3]));
  }
  if (f[0] == "fatcantor") {
    expect_fields(f, 2, spec);
    return fat_cantor_density(static_cast<int>(parse_count(f[1])));
  }
  throw ValidationError("unknown density '" + std::string(spec) + "'");
}

LengthSequence parse_sequence(std::string_view spec) {
  if (spec.starts_with("file:")) {
    const std::string path(after_prefix(spec, "file:"));
    std::istringstream in(slurp(path));
    std::vector<double> table;
    std::string line;
    while (std::getline(in, line)) {
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      table.push_back(parse_number(t));
    }
    return LengthSequence::explicit_table(std::move(table));
  }
  const auto f = split(spec, ':');
  if (f[0] == "harmonic") {
    expect_fields(f, 2, spec);
    return LengthSequence::harmonic(parse_number(f[1]));
  }
  if (f[0] == "power") {
    expect_fields(f, 3, spec);
    return LengthSequence::power(parse_number(f[1]), parse_number(f[2]));
  }
  if (f[0] == "const") {
    expect_fields(f, 2, spec);
    return LengthSequence::constant(parse_number(f[1]));
  }
  if (f[0] == "logharmonic") {
    expect_fields(f, 1, spec);
    return LengthSequence::log_harmonic();
  }
  if (f[0] == "blockA") {
    expect_fields(f, 2, spec);
    return block_sequence_A(static_cast<int>(parse_count(f[1])));
  }
  if (f[0] == "blockB") {
    expect_fields(f, 3, spec);
    return block_sequence_B(static_cast<int>(parse_count(f[1])), parse_number(f[2]));
  }
  throw ValidationError("unknown sequence '" + std::string(spec) + "'");
}

ArcSet parse_set(std::string_view spec) {
  if (spec == "full") return ArcSet::full();
  if (spec == "empty") return ArcSet{};
  std::vector<Arc> arcs;
  for (const auto& item : split(spec, ',')) {
    const auto f = split(trim(item), ':');
    if (f[0] == "arc") {
      expect_fields(f, 3, item);
      const double lo = parse_number(f[1]);
      const double hi = parse_number(f[2]);
      if (lo < 0.0 || lo > 1.0 || hi < 0.0 || hi > 1.0) {
        throw DomainError("arc endpoints must lie in [0,1]: '" + item + "'");
      }
      const double len = hi >= lo ? hi - lo : hi + 1.0 - lo;
      if (len >= 1.0) return ArcSet::full();
      arcs.push_back(Arc{wrap01(lo), len});
    } else if (f[0] == "point") {
      expect_fields(f, 2, item);
      arcs.push_back(Arc{wrap01(parse_number(f[1])), 0.0});
    } else {
      throw ValidationError("unknown set item '" + item + "'");
    }
  }
  return ArcSet::from_arcs(arcs);
}

Target parse_target(std::string_view spec) {
  const auto f = split(spec, ':');
  if (f[0] == "grid") {
    if (f.size() != 2 && f.size() != 4) throw ValidationError("malformed spec '" + std::string(spec) + "'");
    const std::uint64_t count = parse_count(f[1]);
    if (count == 0) throw DomainError("grid target needs at least one point");
    const double lo = f.size() == 4 ? parse_number(f[2]) : 0.0;
    const double hi = f.size() == 4 ? parse_number(f[3]) : 1.0;
    PointTarget t;
    for (std::uint64_t i = 0; i < count; ++i) {
      t.points.push_back(wrap01(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count)));
    }
    return t;
  }
  if (f[0] == "points") {
    if (f.size() < 2) throw ValidationError("points target needs at least one point");
    PointTarget t;
    for (std::size_t i = 1; i < f.size(); ++i) t.points.push_back(wrap01(parse_number(f[i])));
    return t;
  }
  const ArcSet set = parse_set(spec);
  if (!set.empty() && !set.is_full() && set.measure() == 0.0) {
    PointTarget t;
    for (const Arc& a : set.arcs()) t.points.push_back(a.start);
    return t;
  }
  return set;
}

SupportMeasure parse_measure(std::string_view spec, const ArcSet& carrier) {
  const auto f = split(spec, ':');
  if (f[0] == "lebesgue") {
    expect_fields(f, 1, spec);
    return SupportMeasure::lebesgue_on(carrier);
  }
  if (f[0] == "atom") {
    expect_fields(f, 2, spec);
    return SupportMeasure::atom(parse_number(f[1]));
  }
  if (f[0] == "atoms") {
    expect_fields(f, 1, spec);
    std::vector<double> pts;
    for (const Arc& a : carrier.arcs()) pts.push_back(wrap01(a.start + 0.5 * a.length));
    if (pts.empty()) throw DomainError("atoms measure needs a nonempty carrier");
    std::vector<double> w(pts.size(), 1.0 / static_cast<double>(pts.size()));
    return SupportMeasure::atoms(std::move(pts), std::move(w));
  }
  if (f[0] == "grid") {
    expect_fields(f, 2, spec);
    const std::uint64_t cells = parse_count(f[1]);
    if (cells == 0) throw DomainError("grid measure needs at least one cell");
    const double total = carrier.measure();
    if (!(total > 0.0)) throw DomainError("grid measure needs a carrier of positive length");
    std::vector<double> pts;
    std::vector<double> w;
    const double h = total / static_cast<double>(cells);
    for (const Arc& a : carrier.arcs()) {
      const auto k = static_cast<std::uint64_t>(std::max(1.0, std::round(a.length / h)));
      const double cell = a.length / static_cast<double>(k);
      for (std::uint64_t i = 0; i < k; ++i) {
        pts.push_back(wrap01(a.start + (static_cast<double>(i) + 0.5) * cell));
        w.push_back(cell / total);
      }
    }
    return SupportMeasure::weighted_grid(std::move(pts), std::move(w), h);
  }
  throw ValidationError("unknown measure '" + std::string(spec) + "'");
}

std::vector<std::uint64_t> parse_checkpoints(std::string_view spec, std::uint64_t n_max) {
  if (spec.starts_with("log:")) {
    const auto per = parse_count(after_prefix(spec, "log:"));
    if (per == 0) throw DomainError("log checkpoints need a positive count per decade");
    if (n_max == 0) return {};
    return log_checkpoints(n_max, static_cast<int>(per));
  }
  std::vector<std::uint64_t> out = parse_count_list(spec);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 1 || out[i] > n_max) throw DomainError("checkpoints must lie in [1, N_max]");
    if (i > 0 && out[i] <= out[i - 1]) throw DomainError("checkpoints must be strictly increasing");
  }
  return out;
}

}  // namespace dvcover
