#include "fex/config.hpp"

#include "fex/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <variant>

namespace fex {

namespace {

using Value = std::variant<double, bool, std::string, std::vector<double>>;

struct Entry {
  Value value;
  int line;
};

struct Document {
  // "section.key" -> entry, in document order for deterministic messages.
  std::map<std::string, Entry> entries;
  std::map<std::string, int> sections;
};

std::string at_line(int line) { return "line " + std::to_string(line) + ": "; }

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string_view strip_comment(std::string_view s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && !s.empty();
}

Value parse_value(std::string_view text, int line) {
  text = trim(text);
  if (text.empty()) throw ValidationError(at_line(line) + "missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') throw ValidationError(at_line(line) + "unterminated string");
    return std::string(text.substr(1, text.size() - 2));
  }
  if (text == "true") return true;
  if (text == "false") return false;
  if (text.front() == '[') {
    if (text.back() != ']') throw ValidationError(at_line(line) + "unterminated array");
    std::vector<double> values;
    const auto body = trim(text.substr(1, text.size() - 2));
    std::size_t pos = 0;
    while (pos <= body.size() && !body.empty()) {
      const auto comma = body.find(',', pos);
      const auto item = trim(body.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      if (item.empty() && comma == std::string_view::npos) break;  // trailing comma
      double v = 0.0;
      if (!parse_number(item, v)) throw ValidationError(at_line(line) + "array element '" + std::string(item) + "' is not a number");
      values.push_back(v);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return values;
  }
  double v = 0.0;
  if (!parse_number(text, v)) throw ValidationError(at_line(line) + "cannot parse value '" + std::string(text) + "'");
  return v;
}

Document parse_document(std::string_view text) {
  Document doc;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(at_line(line_no) + "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ValidationError(at_line(line_no) + "empty section name");
      if (!doc.sections.emplace(section, line_no).second) {
        throw ValidationError(at_line(line_no) + "duplicate section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ValidationError(at_line(line_no) + "expected 'key = value'");
    const auto key = std::string(trim(line.substr(0, eq)));
    if (key.empty()) throw ValidationError(at_line(line_no) + "empty key");
    if (section.empty()) throw ValidationError(at_line(line_no) + "key '" + key + "' outside of any section");
    const auto full = section + "." + key;
    if (!doc.entries.emplace(full, Entry{parse_value(line.substr(eq + 1), line_no), line_no}).second) {
      throw ValidationError(at_line(line_no) + "duplicate key " + full);
    }
  }
  return doc;
}

class Reader {
 public:
  explicit Reader(const Document& doc) : doc_(doc) {}

  bool has(const std::string& key) const { return doc_.entries.count(key) > 0; }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const auto* e = find(key, fallback.has_value());
    if (!e) return *fallback;
    if (const auto* d = std::get_if<double>(&e->value)) {
      if (!std::isfinite(*d)) throw ValidationError(at_line(e->line) + key + " must be finite");
      return *d;
    }
    throw ValidationError(at_line(e->line) + key + " must be a number");
  }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double v = number(key, fallback);
    if (!(v > 0.0)) throw ValidationError(anchor(key) + key + " must be positive (got " + format_double(v) + ")");
    return v;
  }

  double nonnegative(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double v = number(key, fallback);
    if (!(v >= 0.0)) throw ValidationError(anchor(key) + key + " must be nonnegative (got " + format_double(v) + ")");
    return v;
  }

  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
    const auto* e = find(key, fallback.has_value());
    if (!e) return *fallback;
    const auto* d = std::get_if<double>(&e->value);
    if (!d || std::floor(*d) != *d || std::abs(*d) > 1e9) {
      throw ValidationError(at_line(e->line) + key + " must be an integer");
    }
    return static_cast<int>(*d);
  }

  bool boolean(const std::string& key, bool fallback) {
    const auto* e = find(key, true);
    if (!e) return fallback;
    if (const auto* b = std::get_if<bool>(&e->value)) return *b;
    throw ValidationError(at_line(e->line) + key + " must be true or false");
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const auto* e = find(key, fallback.has_value());
    if (!e) return *fallback;
    if (const auto* s = std::get_if<std::string>(&e->value)) return *s;
    throw ValidationError(at_line(e->line) + key + " must be a quoted string");
  }

  std::vector<double> list(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
    const auto* e = find(key, fallback.has_value());
    if (!e) return *fallback;
    if (const auto* v = std::get_if<std::vector<double>>(&e->value)) return *v;
    throw ValidationError(at_line(e->line) + key + " must be an array of numbers");
  }

  std::string anchor(const std::string& key) const {
    const auto it = doc_.entries.find(key);
    return it == doc_.entries.end() ? std::string() : at_line(it->second.line);
  }

  // Every key in the document must have been read.
  void reject_unknown(const std::set<std::string>& allowed_sections) const {
    for (const auto& [name, line] : doc_.sections) {
      if (!allowed_sections.count(name)) throw ValidationError(at_line(line) + "unknown section [" + name + "]");
    }
    for (const auto& [key, entry] : doc_.entries) {
      if (!used_.count(key)) throw ValidationError(at_line(entry.line) + "unknown key " + key);
    }
  }

 private:
  const Entry* find(const std::string& key, bool optional) {
    used_.insert(key);
    const auto it = doc_.entries.find(key);
    if (it == doc_.entries.end()) {
      if (optional) return nullptr;
      throw ValidationError("missing required key " + key);
    }
    return &it->second;
  }

  const Document& doc_;
  std::set<std::string> used_;
};

FieldProfile read_profile(Reader& in, const std::string& name) {
  const std::string p = "init." + name + ".";
  const std::string kind = in.string(p + "kind");
  if (kind == "constant") return ic::Constant{in.number(p + "value")};
  if (kind == "constant_plus_cosine") {
    ic::ConstantPlusCosine c;
    c.base = in.number(p + "base");
    c.amplitude = in.number(p + "amplitude", 0.0);
    c.mode = in.integer(p + "mode", 1);
    if (c.mode < 0) throw ValidationError(in.anchor(p + "mode") + p + "mode must be nonnegative");
    return c;
  }
  if (kind == "gaussian_bump") {
    ic::GaussianBump g;
    g.center = in.number(p + "center");
    g.width = in.positive(p + "width");
    g.height = in.number(p + "height");
    g.baseline = in.number(p + "baseline", 0.0);
    return g;
  }
  if (kind == "from_file") return ic::FromFile{in.string(p + "path")};
  throw ValidationError(in.anchor(p + "kind") + p + "kind '" + kind +
                        "' is not one of constant, constant_plus_cosine, gaussian_bump, from_file");
}

SimConfig read_config(Reader& in) {
  SimConfig cfg;
  cfg.length = in.positive("domain.length", 1.0);
  cfg.n = in.integer("domain.n", 128);
  if (cfg.n < 4) throw ValidationError(in.anchor("domain.n") + "domain.n must be at least 4");

  cfg.params.chi1 = in.positive("params.chi1");
  cfg.params.chi2 = in.positive("params.chi2");
  cfg.params.d = in.positive("params.d");
  cfg.params.lambda = in.positive("params.lambda");
  cfg.params.mu = in.positive("params.mu");
  cfg.params.r = in.nonnegative("params.r");

  cfg.init.u = read_profile(in, "u");
  cfg.init.v = read_profile(in, "v");
  cfg.init.w = read_profile(in, "w");

  cfg.time.t_end = in.positive("time.t_end");
  cfg.time.safety = in.positive("time.safety", 0.9);
  if (cfg.time.safety > 1.0) throw ValidationError(in.anchor("time.safety") + "time.safety must not exceed 1");
  cfg.time.dt_max = in.positive("time.dt_max", 1e-2);
  cfg.time.output_every = in.positive("time.output_every", 0.1);
  cfg.time.snapshot_times = in.list("time.snapshot_times", std::vector<double>{});
  for (double s : cfg.time.snapshot_times) {
    if (!(s >= 0.0)) throw ValidationError(in.anchor("time.snapshot_times") + "time.snapshot_times must be nonnegative");
  }

  const auto mode = in.string("diagnostics.b_mode", "auto");
  if (mode == "auto") {
    cfg.diagnostics.b_mode = BMode::AutoGeometricMean;
  } else if (mode == "fixed") {
    cfg.diagnostics.b_mode = BMode::Fixed;
    cfg.diagnostics.fixed_b = in.positive("diagnostics.b");
  } else {
    throw ValidationError(in.anchor("diagnostics.b_mode") + "diagnostics.b_mode must be \"auto\" or \"fixed\"");
  }
  cfg.diagnostics.tail_fraction = in.positive("diagnostics.tail_fraction", 0.5);
  if (!(cfg.diagnostics.tail_fraction < 1.0)) {
    throw ValidationError(in.anchor("diagnostics.tail_fraction") + "diagnostics.tail_fraction must be below 1");
  }
  cfg.diagnostics.steady_tol = in.nonnegative("diagnostics.steady_tol", 1e-9);

  cfg.output.dir = in.string("output.dir", "out");
  if (cfg.output.dir.empty()) throw ValidationError(in.anchor("output.dir") + "output.dir must not be empty");
  cfg.output.write_snapshots = in.boolean("output.write_snapshots", false);
  return cfg;
}

const std::set<std::string> kConfigSections = {"domain", "params", "init.u", "init.v", "init.w",
                                               "time",   "diagnostics", "output"};

SweepAxis parse_axis(const std::string& name, const std::string& where) {
  if (name == "chi2") return SweepAxis::Chi2;
  if (name == "ubar0") return SweepAxis::Ubar0;
  if (name == "vbar0") return SweepAxis::Vbar0;
  if (name == "r") return SweepAxis::R;
  if (name == "lambda") return SweepAxis::Lambda;
  throw ValidationError(where + "sweep axis '" + name + "' is not one of chi2, ubar0, vbar0, r, lambda");
}

void write_profile(std::ostream& os, const FieldProfile& profile, const char* name) {
  os << "\n[init." << name << "]\n";
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ic::Constant>) {
          os << "kind = \"constant\"\nvalue = " << format_double(p.value) << "\n";
        } else if constexpr (std::is_same_v<T, ic::ConstantPlusCosine>) {
          os << "kind = \"constant_plus_cosine\"\nbase = " << format_double(p.base)
             << "\namplitude = " << format_double(p.amplitude) << "\nmode = " << p.mode << "\n";
        } else if constexpr (std::is_same_v<T, ic::GaussianBump>) {
          os << "kind = \"gaussian_bump\"\ncenter = " << format_double(p.center) << "\nwidth = " << format_double(p.width)
             << "\nheight = " << format_double(p.height) << "\nbaseline = " << format_double(p.baseline) << "\n";
        } else {
          os << "kind = \"from_file\"\npath = \"" << p.path << "\"\n";
        }
      },
      profile);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Chi2: return "chi2";
    case SweepAxis::Ubar0: return "ubar0";
    case SweepAxis::Vbar0: return "vbar0";
    case SweepAxis::R: return "r";
    case SweepAxis::Lambda: return "lambda";
  }
  return "unknown";
}

SimConfig parse_config(std::string_view text) {
  const auto doc = parse_document(text);
  Reader in(doc);
  auto cfg = read_config(in);
  in.reject_unknown(kConfigSections);
  return cfg;
}

SweepSpec parse_sweep(std::string_view text) {
  const auto doc = parse_document(text);
  Reader in(doc);
  SweepSpec spec;
  spec.base = read_config(in);
  for (int k = 1; k <= 2; ++k) {
    const auto axis_key = "sweep.axis" + std::to_string(k);
    const auto values_key = "sweep.values" + std::to_string(k);
    if (k == 2 && !in.has(axis_key)) break;
    SweepDimension dim;
    dim.axis = parse_axis(in.string(axis_key), in.anchor(axis_key));
    dim.values = in.list(values_key);
    if (dim.values.empty()) throw ValidationError(in.anchor(values_key) + values_key + " must not be empty");
    for (double v : dim.values) {
      const bool ok = dim.axis == SweepAxis::R ? v >= 0.0 : v > 0.0;
      if (!ok) throw ValidationError(in.anchor(values_key) + values_key + " has inadmissible value " + format_double(v));
    }
    spec.axes.push_back(std::move(dim));
  }
  if (spec.axes.size() == 2 && spec.axes[0].axis == spec.axes[1].axis) {
    throw ValidationError(in.anchor("sweep.axis2") + "sweep axes must differ");
  }
  spec.keep_total_mean = in.boolean("sweep.keep_total_mean", false);
  auto sections = kConfigSections;
  sections.insert("sweep");
  in.reject_unknown(sections);
  return spec;
}

std::string serialize_config(const SimConfig& c) {
  std::ostringstream os;
  os << "[domain]\nlength = " << format_double(c.length) << "\nn = " << c.n << "\n";
  os << "\n[params]\nchi1 = " << format_double(c.params.chi1) << "\nchi2 = " << format_double(c.params.chi2)
     << "\nd = " << format_double(c.params.d) << "\nlambda = " << format_double(c.params.lambda)
     << "\nmu = " << format_double(c.params.mu) << "\nr = " << format_double(c.params.r) << "\n";
  write_profile(os, c.init.u, "u");
  write_profile(os, c.init.v, "v");
  write_profile(os, c.init.w, "w");
  os << "\n[time]\nt_end = " << format_double(c.time.t_end) << "\nsafety = " << format_double(c.time.safety)
     << "\ndt_max = " << format_double(c.time.dt_max) << "\noutput_every = " << format_double(c.time.output_every)
     << "\nsnapshot_times = [";
  for (std::size_t k = 0; k < c.time.snapshot_times.size(); ++k) {
    os << (k ? ", " : "") << format_double(c.time.snapshot_times[k]);
  }
  os << "]\n";
  os << "\n[diagnostics]\nb_mode = \"" << (c.diagnostics.b_mode == BMode::Fixed ? "fixed" : "auto") << "\"\n";
  if (c.diagnostics.b_mode == BMode::Fixed) os << "b = " << format_double(c.diagnostics.fixed_b) << "\n";
  os << "tail_fraction = " << format_double(c.diagnostics.tail_fraction)
     << "\nsteady_tol = " << format_double(c.diagnostics.steady_tol) << "\n";
  os << "\n[output]\ndir = \"" << c.output.dir << "\"\nwrite_snapshots = " << (c.output.write_snapshots ? "true" : "false")
     << "\n";
  return os.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fex
