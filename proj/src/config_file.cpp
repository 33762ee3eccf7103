#include "ness/config_file.hpp"

#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "ness/errors.hpp"

namespace ness {
namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing " # ..." or " ; ..." comment from a value.
std::string strip_comment(const std::string& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if ((v[i] == '#' || v[i] == ';') && (v[i - 1] == ' ' || v[i - 1] == '\t')) return trim(v.substr(0, i));
  }
  return trim(v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : v) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Parsed file plus the line each `section.key` came from.
class Document {
 public:
  Document(std::istream& in, std::string source) : source_(std::move(source)) {
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    index_lines(text);
    std::istringstream stream(text);
    try {
      pt::read_ini(stream, tree_);
    } catch (const pt::ini_parser_error& e) {
      std::ostringstream msg;
      msg << source_ << ":" << e.line() << ": " << e.message();
      throw ConfigError(msg.str());
    }
    for (const auto& [key, node] : tree_) {
      if (node.empty() && !node.data().empty()) {
        fail(key, "key outside of any section");
      }
    }
  }

  void apply(const Overrides& overrides) {
    for (const auto& [path, value] : overrides) {
      const auto dot = path.find('.');
      if (dot == std::string::npos || dot == 0 || dot + 1 == path.size()) {
        throw ConfigError("override '" + path + "' must have the form section.key");
      }
      const pt::ptree::path_type section(path.substr(0, dot), '\0');
      pt::ptree* child = nullptr;
      if (auto existing = tree_.get_child_optional(section)) {
        child = &*existing;
      } else {
        child = &tree_.put_child(section, pt::ptree{});
      }
      child->put(pt::ptree::path_type(path.substr(dot + 1), '\0'), value);
      overridden_.insert(path);
    }
  }

  /// Rejects sections and keys outside the allowed sets.
  void check_keys(const std::map<std::string, std::set<std::string>>& allowed) const {
    for (const auto& [section, node] : tree_) {
      const auto it = allowed.find(section);
      if (it == allowed.end()) fail(section, "unknown section [" + section + "]");
      for (const auto& [key, value] : node) {
        if (!it->second.contains(key)) fail(section + "." + key, "unknown key '" + section + "." + key + "'");
      }
    }
  }

  bool has_section(const std::string& section) const {
    return tree_.get_child_optional(pt::ptree::path_type(section, '\0')).has_value();
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto s = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
    if (!s) return std::nullopt;
    const auto v = s->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return strip_comment(*v);
  }

  double number(const std::string& section, const std::string& key, double fallback) const {
    const auto v = raw(section, key);
    return v ? to_number(section + "." + key, *v) : fallback;
  }

  std::size_t count(const std::string& section, const std::string& key, std::size_t fallback) const {
    const auto v = raw(section, key);
    if (!v) return fallback;
    std::size_t out = 0;
    const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || p != v->data() + v->size()) {
      fail(section + "." + key, "expected a non-negative integer, got '" + *v + "'");
    }
    return out;
  }

  bool flag(const std::string& section, const std::string& key, bool fallback) const {
    const auto v = raw(section, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1" || *v == "on") return true;
    if (*v == "false" || *v == "no" || *v == "0" || *v == "off") return false;
    fail(section + "." + key, "expected true or false, got '" + *v + "'");
  }

  std::vector<double> numbers(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    if (const auto v = raw(section, key)) {
      for (const auto& tok : split_list(*v)) out.push_back(to_number(section + "." + key, tok));
    }
    return out;
  }

  std::optional<Interval> interval(const std::string& section, const std::string& key) const {
    if (!raw(section, key)) return std::nullopt;
    const auto v = numbers(section, key);
    if (v.size() != 2 || !(v[1] > v[0])) fail(section + "." + key, "expected two increasing times 'begin end'");
    return Interval{v[0], v[1]};
  }

  const pt::ptree& tree() const { return tree_; }

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    std::ostringstream msg;
    msg << source_;
    if (overridden_.contains(field)) {
      msg << ": override";
    } else if (const auto it = lines_.find(field); it != lines_.end()) {
      msg << ":" << it->second;
    }
    msg << ": " << field << ": " << what;
    throw ConfigError(msg.str());
  }

  double to_number(const std::string& field, const std::string& text) const {
    double out = 0.0;
    const char* begin = text.data();
    if (!text.empty() && text.front() == '+') ++begin;
    const auto [p, ec] = std::from_chars(begin, text.data() + text.size(), out);
    if (ec != std::errc{} || p != text.data() + text.size() || !std::isfinite(out)) {
      fail(field, "expected a finite number, got '" + text + "'");
    }
    return out;
  }

 private:
  void index_lines(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto t = trim(line);
      if (t.empty() || t.front() == '#' || t.front() == ';') continue;
      if (t.front() == '[' && t.back() == ']') {
        section = trim(t.substr(1, t.size() - 2));
        lines_.emplace(section, line_no);
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) continue;
      const auto key = trim(t.substr(0, eq));
      lines_.emplace(section.empty() ? key : section + "." + key, line_no);
    }
  }

  std::string source_;
  pt::ptree tree_;
  std::map<std::string, int> lines_;
  std::set<std::string> overridden_;
};

const std::map<std::string, std::set<std::string>>& experiment_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"grid", {"x_min", "x_max", "n_points"}},
      {"potential",
       {"family", "omega0", "c0", "a1", "a2", "functional", "coefficients", "mapping_sigma", "mapping_norm"}},
      {"initial", {"x0", "include_phase", "norm"}},
      {"evolve", {"dt", "t_final", "sample_every", "sigma0", "collapse_threshold"}},
      {"nm", {"t0", "omega", "gamma"}},
      {"analysis",
       {"decay_window", "relaxation_window", "smoothing_period", "slope_tol", "window_fraction",
        "transient_time"}},
      {"output", {"snapshot_times", "snapshot_every"}},
      {"expect", {}},  // filled from expectation_metrics() plus fate/abort
  };
  return keys;
}

GridSpec read_grid(const Document& doc) {
  GridSpec g;
  g.x_min = doc.number("grid", "x_min", g.x_min);
  g.x_max = doc.number("grid", "x_max", g.x_max);
  g.n_points = doc.count("grid", "n_points", g.n_points);
  if (g.n_points < 16 || (g.n_points & (g.n_points - 1)) != 0) {
    doc.fail("grid.n_points", "must be a power of two >= 16, got " + std::to_string(g.n_points));
  }
  if (!(g.x_max > g.x_min)) doc.fail("grid.x_max", "must exceed grid.x_min");
  return g;
}

Expectation parse_expectation(const Document& doc, const std::string& metric, const std::string& text) {
  const std::string field = "expect." + metric;
  Expectation e;
  e.metric = metric;
  e.text = text;
  if (!text.empty() && (text.front() == '<' || text.front() == '>')) {
    e.kind = text.front() == '<' ? Expectation::Kind::at_most : Expectation::Kind::at_least;
    e.value = doc.to_number(field, trim(text.substr(1)));
    return e;
  }
  const auto pm = text.find("+/-");
  if (pm == std::string::npos) doc.fail(field, "expected 'value +/- tol', '< bound' or '> bound', got '" + text + "'");
  e.value = doc.to_number(field, trim(text.substr(0, pm)));
  auto tol = trim(text.substr(pm + 3));
  const bool percent = !tol.empty() && tol.back() == '%';
  if (percent) tol.pop_back();
  e.tolerance = doc.to_number(field, trim(tol));
  if (percent) e.tolerance = std::abs(e.value) * e.tolerance / 100.0;
  if (e.tolerance < 0.0) doc.fail(field, "tolerance must be >= 0");
  return e;
}

ExpectBlock read_expect(const Document& doc) {
  ExpectBlock block;
  const auto section = doc.tree().get_child_optional(pt::ptree::path_type("expect", '\0'));
  if (!section) return block;
  const auto& metrics = expectation_metrics();
  for (const auto& [key, node] : *section) {
    const auto value = strip_comment(node.data());
    if (key == "fate") {
      try {
        block.fate = fate_from_string(value);
      } catch (const ConfigError& e) {
        doc.fail("expect.fate", e.what());
      }
    } else if (key == "abort") {
      if (value != "none" && value != "collapse" && value != "edge-leak") {
        doc.fail("expect.abort", "expected none, collapse or edge-leak, got '" + value + "'");
      }
      block.abort = value;
    } else if (std::ranges::find(metrics, key) != metrics.end()) {
      block.metrics.push_back(parse_expectation(doc, key, value));
    } else {
      doc.fail("expect." + key, "unknown expectation metric '" + key + "'");
    }
  }
  return block;
}

template <typename Fn>
void wrap(const Document& doc, const std::string& field, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    doc.fail(field, e.what());
  }
}

std::string to_hex(const unsigned char* data, unsigned len) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[data[i] >> 4]);
    out.push_back(kHex[data[i] & 0xf]);
  }
  return out;
}

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  return to_hex(digest, len);
}

std::string fmt(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, end);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i]);
  return out;
}

}  // namespace

std::pair<std::string, std::string> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + text + "' must have the form section.key=value");
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

bool Expectation::accepts(double measured) const noexcept {
  if (!std::isfinite(measured)) return false;
  switch (kind) {
    case Kind::band:
      return std::abs(measured - value) <= tolerance;
    case Kind::at_most:
      return measured <= value;
    case Kind::at_least:
      return measured >= value;
  }
  return false;
}

const std::vector<std::string>& expectation_metrics() {
  static const std::vector<std::string> names{
      "xi_c",         "beta",           "gamma_fit",          "A0",
      "asymptote",    "final_peak_density", "final_peak_amplitude", "late_mean_peak_amplitude",
      "fate_slope",   "final_norm",     "max_norm_balance_error", "residual_period",
  };
  return names;
}

ExperimentConfig parse_experiment(std::istream& in, const std::string& source, const Overrides& overrides) {
  Document doc(in, source);
  doc.apply(overrides);
  auto allowed = experiment_keys();
  for (const auto& m : expectation_metrics()) allowed["expect"].insert(m);
  allowed["expect"].insert({"fate", "abort"});
  doc.check_keys(allowed);

  ExperimentConfig cfg;
  cfg.source = source;
  RunConfig& run = cfg.run;
  run.grid = read_grid(doc);

  auto& p = run.potential;
  if (const auto family = doc.raw("potential", "family")) {
    wrap(doc, "potential.family", [&] { p.family = potential_family_from_string(*family); });
  } else {
    doc.fail("potential.family", "missing (hermitian-ho, pt-ho, damped-ho or mapped-functional)");
  }
  p.omega0 = doc.number("potential", "omega0", p.omega0);
  p.c0 = doc.number("potential", "c0", p.c0);
  p.a1 = doc.number("potential", "a1", p.a1);
  p.a2 = doc.number("potential", "a2", p.a2);
  p.mapping_sigma = doc.number("potential", "mapping_sigma", p.mapping_sigma);
  p.mapping_norm = doc.number("potential", "mapping_norm", p.mapping_norm);
  if (p.family == PotentialFamily::mapped_functional) {
    const auto kind = doc.raw("potential", "functional").value_or("polynomial");
    if (kind == "polynomial") {
      p.functional = PolynomialFunctional{doc.numbers("potential", "coefficients")};
    } else if (kind == "derivative") {
      p.functional = DerivativeFunctional{p.a1, p.a2};
    } else {
      doc.fail("potential.functional", "expected polynomial or derivative, got '" + kind + "'");
    }
    wrap(doc, "potential.functional", [&] { ness::validate(p.functional); });
  }

  run.initial.x0 = doc.number("initial", "x0", run.initial.x0);
  run.initial.include_phase = doc.flag("initial", "include_phase", run.initial.include_phase);
  run.initial.norm = doc.number("initial", "norm", run.initial.norm);

  run.dt = doc.number("evolve", "dt", run.dt);
  run.t_final = doc.number("evolve", "t_final", run.t_final);
  run.sample_every = doc.count("evolve", "sample_every", run.sample_every);
  run.sigma0 = doc.number("evolve", "sigma0", run.sigma0);
  run.collapse_threshold = doc.number("evolve", "collapse_threshold", run.collapse_threshold);

  if (doc.has_section("nm")) {
    NMSchedule nm;
    nm.sigma0 = run.sigma0;
    nm.t0 = doc.number("nm", "t0", 0.0);
    nm.omega_mod = doc.number("nm", "omega", 0.0);
    nm.gamma = doc.number("nm", "gamma", 0.0);
    wrap(doc, "nm", [&] { nm.validate(); });
    run.nm = nm;
  }
  run.snapshot_times = doc.numbers("output", "snapshot_times");
  if (const double every = doc.number("output", "snapshot_every", 0.0); every != 0.0) {
    if (every < 0.0) doc.fail("output.snapshot_every", "must be > 0");
    if (!(std::isfinite(run.t_final) && run.t_final / every <= 1e5)) {
      doc.fail("output.snapshot_every", "would produce more than 1e5 snapshots");
    }
    for (double k = 0.0; k * every <= run.t_final * (1.0 + 1e-12); k += 1.0) run.snapshot_times.push_back(k * every);
  }

  // Field-specific validation first so messages carry line numbers, then the
  // full cross-field check.
  static const std::vector<std::pair<std::string, std::string>> checked{
      {"evolve", "dt"}, {"evolve", "t_final"}, {"evolve", "sample_every"}, {"evolve", "collapse_threshold"},
      {"initial", "norm"}, {"potential", "omega0"}};
  try {
    run.validate();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    for (const auto& [s, k] : checked) {
      if (what.starts_with(s + "." + k)) doc.fail(s + "." + k, what.substr(s.size() + k.size() + 2));
    }
    doc.fail("config", what);
  }

  auto& a = cfg.analysis;
  a.decay_window = doc.interval("analysis", "decay_window");
  a.relaxation_window = doc.interval("analysis", "relaxation_window");
  const double default_period = run.nm && run.nm->gamma != 0.0 ? 2.0 * std::numbers::pi / run.nm->omega_mod
                                                                : 2.0 * std::numbers::pi / p.omega0;
  a.smoothing_period = doc.number("analysis", "smoothing_period", default_period);
  if (a.smoothing_period < 0.0) doc.fail("analysis.smoothing_period", "must be >= 0");
  a.fate.smoothing_period = a.smoothing_period;
  a.fate.slope_tol = doc.number("analysis", "slope_tol", a.fate.slope_tol);
  a.fate.window_fraction = doc.number("analysis", "window_fraction", a.fate.window_fraction);
  a.fate.transient_time = doc.number("analysis", "transient_time", a.fate.transient_time);
  if (!(a.fate.slope_tol > 0.0)) doc.fail("analysis.slope_tol", "must be > 0");
  if (!(a.fate.window_fraction > 0.0 && a.fate.window_fraction <= 1.0)) {
    doc.fail("analysis.window_fraction", "must lie in (0, 1]");
  }
  if (a.fate.transient_time < 0.0) doc.fail("analysis.transient_time", "must be >= 0");

  cfg.expect = read_expect(doc);
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_experiment(in, path.string(), overrides);
}

std::string canonical_text(const RunConfig& c) {
  std::map<std::string, std::string> kv;
  kv["grid.x_min"] = fmt(c.grid.x_min);
  kv["grid.x_max"] = fmt(c.grid.x_max);
  kv["grid.n_points"] = std::to_string(c.grid.n_points);
  kv["evolve.dt"] = fmt(c.dt);
  kv["evolve.t_final"] = fmt(c.t_final);
  kv["evolve.sample_every"] = std::to_string(c.sample_every);
  kv["evolve.sigma0"] = fmt(c.sigma0);
  kv["evolve.collapse_threshold"] = fmt(c.collapse_threshold);
  const auto& p = c.potential;
  kv["potential.family"] = std::string(to_string(p.family));
  kv["potential.omega0"] = fmt(p.omega0);
  kv["potential.c0"] = fmt(p.c0);
  kv["potential.a1"] = fmt(p.a1);
  kv["potential.a2"] = fmt(p.a2);
  kv["potential.mapping_sigma"] = fmt(p.mapping_sigma);
  kv["potential.mapping_norm"] = fmt(p.mapping_norm);
  if (const auto* poly = std::get_if<PolynomialFunctional>(&p.functional)) {
    kv["potential.functional"] = "polynomial";
    kv["potential.coefficients"] = fmt_list(poly->c);
  } else {
    const auto& d = std::get<DerivativeFunctional>(p.functional);
    kv["potential.functional"] = "derivative";
    kv["potential.coefficients"] = fmt(d.a1) + " " + fmt(d.a2);
  }
  kv["initial.x0"] = fmt(c.initial.x0);
  kv["initial.include_phase"] = c.initial.include_phase ? "true" : "false";
  kv["initial.norm"] = fmt(c.initial.norm);
  if (c.nm) {
    kv["nm.t0"] = fmt(c.nm->t0);
    kv["nm.omega"] = fmt(c.nm->omega_mod);
    kv["nm.gamma"] = fmt(c.nm->gamma);
  }
  auto times = c.snapshot_times;
  std::ranges::sort(times);
  kv["output.snapshot_times"] = fmt_list(times);
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string config_hash(const RunConfig& config) { return sha256_hex(canonical_text(config)); }

EigenConfig parse_eigen(std::istream& in, const std::string& source, const Overrides& overrides) {
  Document doc(in, source);
  doc.apply(overrides);
  doc.check_keys({{"grid", {"x_min", "x_max", "n_points"}},
                  {"problem", {"omega0", "sigma", "c", "target_norm"}},
                  {"solver", {"tol", "max_iter", "mixing", "unshifted"}},
                  {"output", {}}});
  EigenConfig c;
  c.source = source;
  c.grid = read_grid(doc);
  c.omega0 = doc.number("problem", "omega0", c.omega0);
  c.sigma = doc.number("problem", "sigma", c.sigma);
  c.c = doc.numbers("problem", "c");
  c.target_norm = doc.number("problem", "target_norm", c.target_norm);
  c.tol = doc.number("solver", "tol", c.tol);
  c.max_iter = doc.count("solver", "max_iter", c.max_iter);
  c.mixing = doc.number("solver", "mixing", c.mixing);
  c.unshifted = doc.flag("solver", "unshifted", c.unshifted);
  if (!(c.omega0 > 0.0)) doc.fail("problem.omega0", "must be > 0");
  if (!(c.target_norm > 0.0)) doc.fail("problem.target_norm", "must be > 0");
  if (!(c.tol > 0.0)) doc.fail("solver.tol", "must be > 0");
  if (c.max_iter < 1) doc.fail("solver.max_iter", "must be >= 1");
  if (!(c.mixing > 0.0 && c.mixing <= 1.0)) doc.fail("solver.mixing", "must lie in (0, 1]");
  return c;
}

EigenConfig load_eigen(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_eigen(in, path.string(), overrides);
}

std::string config_hash(const EigenConfig& c) {
  std::ostringstream s;
  s << "grid.x_min=" << fmt(c.grid.x_min) << "\ngrid.x_max=" << fmt(c.grid.x_max)
    << "\ngrid.n_points=" << c.grid.n_points << "\nproblem.c=" << fmt_list(c.c) << "\nproblem.omega0="
    << fmt(c.omega0) << "\nproblem.sigma=" << fmt(c.sigma) << "\nproblem.target_norm=" << fmt(c.target_norm)
    << "\nsolver.max_iter=" << c.max_iter << "\nsolver.mixing=" << fmt(c.mixing) << "\nsolver.tol=" << fmt(c.tol)
    << "\nsolver.unshifted=" << (c.unshifted ? "true" : "false") << "\n";
  return sha256_hex(s.str());
}

SweepSpec load_sweep(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sweep file '" + path.string() + "'");
  Document doc(in, path.string());
  SweepSpec spec;
  for (const auto& [section, node] : doc.tree()) {
    if (section == "sweep") {
      for (const auto& [key, value] : node) {
        if (key != "base") doc.fail("sweep." + key, "unknown key 'sweep." + key + "'");
      }
    } else if (section == "vary") {
      for (const auto& [key, value] : node) {
        const auto dot = key.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
          doc.fail("vary." + key, "parameter must be written as section.key");
        }
        spec.axes.emplace_back(key, split_list(strip_comment(value.data())));
      }
    } else {
      doc.fail(section, "unknown section [" + section + "]");
    }
  }
  const auto base = doc.raw("sweep", "base");
  if (!base || base->empty()) doc.fail("sweep.base", "missing base config path");
  spec.base = std::filesystem::path(*base);
  if (spec.base.is_relative()) spec.base = path.parent_path() / spec.base;
  return spec;
}

std::vector<Overrides> sweep_points(const SweepSpec& spec) {
  std::vector<Overrides> points;
  if (spec.axes.empty()) return points;
  for (const auto& [key, values] : spec.axes) {
    if (values.empty()) return points;
  }
  points.emplace_back();
  for (const auto& [key, values] : spec.axes) {
    std::vector<Overrides> next;
    for (const auto& partial : points) {
      for (const auto& v : values) {
        auto o = partial;
        o.emplace_back(key, v);
        next.push_back(std::move(o));
      }
    }
    points = std::move(next);
  }
  return points;
}

}  // namespace ness
