#pragma once

// Declarative experiment files and the runner behind the command-line tool.
//
// A scenario is a list of `section.key = value` lines with `#` comments and a
// top-level `kind`. Numbers accept small expressions: `pi/4`, `0.5*pi`,
// `sqrt(2)`, `-1e-3`. Every key is checked; unknown keys are errors.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "ramseylab/decoherence.hpp"
#include "ramseylab/detail/parallel.hpp"
#include "ramseylab/dispersive.hpp"
#include "ramseylab/errors.hpp"
#include "ramseylab/fock.hpp"
#include "ramseylab/linear_optics.hpp"
#include "ramseylab/multi_atom.hpp"
#include "ramseylab/ramsey.hpp"
#include "ramseylab/version.hpp"

namespace ramseylab {

// Malformed or inconsistent scenario text.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

// Unreadable input or unwritable output.
class IoError : public Error {
 public:
  using Error::Error;
};

enum class Kind { fringe_scan, two_atom, prepare_20_02, prepare_303, transfer, decay, dispersive_cat, beamsplitter };

inline constexpr std::array<std::pair<Kind, const char*>, 8> kKindNames{{
    {Kind::fringe_scan, "fringe-scan"},
    {Kind::two_atom, "two-atom"},
    {Kind::prepare_20_02, "prepare-20-02"},
    {Kind::prepare_303, "prepare-303"},
    {Kind::transfer, "transfer"},
    {Kind::decay, "decay"},
    {Kind::dispersive_cat, "dispersive-cat"},
    {Kind::beamsplitter, "beamsplitter"},
}};

inline const char* to_string(Kind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  return "?";
}

inline std::optional<Kind> parse_kind(std::string_view s) {
  for (const auto& [kind, name] : kKindNames)
    if (s == name) return kind;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Number expressions

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string_view s) : s_(s) {}

  double parse() {
    const double v = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(s_.substr(pos_, 1)) + "'");
    if (!std::isfinite(v)) fail("value is not finite");
    return v;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& why) const {
    throw InvalidArgument("cannot read number '" + std::string(s_) + "': " + why);
  }

  void skip() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  double sum() {
    double v = product();
    for (;;) {
      if (eat('+')) v += product();
      else if (eat('-')) v -= product();
      else return v;
    }
  }

  double product() {
    double v = unary();
    for (;;) {
      if (eat('*')) v *= unary();
      else if (eat('/')) v /= unary();
      else return v;
    }
  }

  double unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return atom();
  }

  double atom() {
    skip();
    if (eat('(')) {
      const double v = sum();
      if (!eat(')')) fail("missing ')'");
      return v;
    }
    if (s_.substr(pos_, 2) == "pi") {
      pos_ += 2;
      return kPi;
    }
    if (s_.substr(pos_, 4) == "sqrt") {
      pos_ += 4;
      if (!eat('(')) fail("sqrt needs '('");
      const double v = sum();
      if (!eat(')')) fail("missing ')'");
      if (v < 0.0) fail("sqrt of a negative number");
      return std::sqrt(v);
    }
    double v = 0.0;
    const char* first = s_.data() + pos_;
    const char* last = s_.data() + s_.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr == first) fail("expected a number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return v;
  }
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string format_number(double v) {
  if (v == 0.0) return "0";  // no "-0"
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline double evaluate_expression(std::string_view text) { return detail::ExprParser(text).parse(); }

// ---------------------------------------------------------------------------
// Key-value document

struct Document {
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> entries;
  std::vector<std::string> echo;  // "key = value" in file order
};

inline Document parse_document(std::string_view text) {
  Document doc;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find('\n', start), text.size());
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = "scenario:" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ScenarioError(where + "expected 'key = value'");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    const bool key_ok = !key.empty() && key.front() != '.' && key.back() != '.' &&
                        std::all_of(key.begin(), key.end(), [](char c) {
                          return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.' ||
                                 (c >= 'A' && c <= 'Z');
                        });
    if (!key_ok) throw ScenarioError(where + "malformed key '" + key + "'");
    if (value.empty()) throw ScenarioError(where + key + " has no value");
    if (doc.entries.count(key)) throw ScenarioError(where + key + " is set twice");
    doc.entries[key] = {value, line_no};
    doc.echo.push_back(key + " = " + value);
  }
  return doc;
}

// Typed access that remembers which keys were consumed.
class Reader {
 public:
  explicit Reader(const Document& doc) : doc_(doc) {}

  bool has(const std::string& key) const { return doc_.entries.count(key) != 0; }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    const auto it = doc_.entries.find(key);
    const std::string where = it == doc_.entries.end() ? "scenario: " : "scenario:" + std::to_string(it->second.line) + ": ";
    throw ScenarioError(where + key + " " + why);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const auto it = doc_.entries.find(key);
    if (it == doc_.entries.end()) {
      if (!fallback) fail(key, "is required");
      return *fallback;
    }
    used_.insert(key);
    try {
      return evaluate_expression(it->second.value);
    } catch (const InvalidArgument& e) {
      fail(key, std::string(": ") + e.what());
    }
  }

  double nonnegative(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double v = number(key, fallback);
    if (v < 0.0) fail(key, "must be >= 0");
    return v;
  }

  std::size_t count(const std::string& key, std::optional<std::size_t> fallback = std::nullopt, std::size_t min = 0) {
    const double v = number(key, fallback ? std::optional<double>(static_cast<double>(*fallback)) : std::nullopt);
    if (v != std::floor(v) || v < 0.0 || v > 1e6) fail(key, "must be a non-negative integer");
    const auto n = static_cast<std::size_t>(v);
    if (n < min) fail(key, "must be >= " + std::to_string(min));
    return n;
  }

  std::string word(const std::string& key, const std::string& fallback, const std::vector<std::string>& allowed) {
    const auto it = doc_.entries.find(key);
    if (it == doc_.entries.end()) return fallback;
    used_.insert(key);
    if (std::find(allowed.begin(), allowed.end(), it->second.value) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(key, "must be one of: " + list);
    }
    return it->second.value;
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    return word(key, "", {"true", "false"}) == "true";
  }

  const std::string& raw(const std::string& key) {
    used_.insert(key);
    return doc_.entries.at(key).value;
  }

  void mark(const std::string& key) { used_.insert(key); }

  // Any key nobody asked for is an error.
  void finish() const {
    const Document::Entry* first = nullptr;
    std::string name;
    for (const auto& [key, entry] : doc_.entries) {
      if (used_.count(key)) continue;
      if (!first || entry.line < first->line) {
        first = &entry;
        name = key;
      }
    }
    if (first) throw ScenarioError("scenario:" + std::to_string(first->line) + ": unknown key " + name);
  }

 private:
  const Document& doc_;
  std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Scenario pieces

struct FieldSpec {
  enum class Type { fock, coherent, zero_one, entangled_bell, custom };
  Type type = Type::fock;
  std::size_t n = 0, mu = 0;
  cplx alpha{0.0, 0.0};
  double theta = 0.0;  // phase per photon in mode 2
  std::vector<std::pair<std::array<std::size_t, 2>, cplx>> amplitudes;
  std::size_t n1 = 0, n2 = 0;

  // The field with mode 2 rotated by e^{i mu theta}.
  FieldState build(double theta_value) const {
    FieldState base = [&] {
      switch (type) {
        case Type::fock:
          return tensor(make_fock(n, n1), make_fock(mu, n2));
        case Type::coherent:
          return tensor(make_coherent(alpha, n1).state, make_coherent(alpha, n2).state);
        case Type::zero_one:
          return tensor(make_zero_one(alpha, n1), make_zero_one(alpha, n2));
        case Type::entangled_bell: {
          const double c = std::sqrt(0.5);
          return field_from_amplitudes(n1, n2, {{{1, 0}, c}, {{0, 1}, c}});
        }
        case Type::custom:
          break;
      }
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n1 * n2));
      for (const auto& [idx, a] : amplitudes) v[static_cast<Eigen::Index>(idx[0] * n2 + idx[1])] += a;
      return FieldState::from_unnormalized({n1, n2}, v);
    }();
    if (theta_value == 0.0) return base;
    Eigen::VectorXcd v = base.amplitudes();
    for (std::size_t f = 0; f < base.size(); ++f) {
      v[static_cast<Eigen::Index>(f)] *= std::polar(1.0, static_cast<double>(base.unflatten(f)[1]) * theta_value);
    }
    return FieldState(base.dims(), std::move(v));
  }

  // Probability mass the truncation cuts off, for coherent fields.
  double leakage() const {
    if (type != Type::coherent) return 0.0;
    return make_coherent(alpha, n1).leakage + make_coherent(alpha, n2).leakage;
  }
};

struct ScanSpec {
  ScanVariable variable = ScanVariable::phase;
  double start = 0.0, stop = 2.0 * kPi;
  std::size_t points = 64;
  bool include_stop = false;

  std::vector<double> grid() const { return uniform_grid(start, stop, points, include_stop); }
};

struct FringeScanSpec {
  FieldSpec field;
  AtomAmplitudes atom = AtomAmplitudes::in(Level::ground);
  Level detect = Level::excited;
  SequenceConfig sequence;
  ScanSpec scan;
};

struct TwoAtomSpec {
  FieldSpec field;
  std::array<AtomRecord, 2> atoms;
  ScanSpec scan;  // over the second atom's phase
};

struct Prepare2002Spec {
  double g1tau1 = kPi / 4, g2tau2 = kPi / 2;
  GapConfig gap1, gap2;
  Couplings couplings;
};

struct Prepare303Spec {
  Prepare2002Spec first_two;
  GapConfig gap3;
  double g1tau1 = kPi, g2tau2 = kPi;
};

struct TransferSpec {
  cplx alpha{1.0, 0.0}, beta{0.0, 0.0};
  SequenceConfig first, second;
};

struct DecaySpec {
  double kappa1 = 0.0, kappa2 = 0.0;
  double start = 0.0, stop = 1.0;
  std::size_t points = 11;
};

struct DispersiveCatSpec {
  cplx alpha{1.0, 0.0}, beta{1.0, 0.0};
  AtomAmplitudes atom{std::sqrt(0.5), std::sqrt(0.5)};
  AtomAmplitudes detect{std::sqrt(0.5), std::sqrt(0.5)};
  DispersiveConfig config;
  std::size_t dim = 24;
};

struct BeamSplitterSpec {
  BeamSplitterConfig splitter;
  std::size_t n = 1, mu = 1;
};

using ScenarioSpec = std::variant<FringeScanSpec, TwoAtomSpec, Prepare2002Spec, Prepare303Spec, TransferSpec, DecaySpec,
                                  DispersiveCatSpec, BeamSplitterSpec>;

struct Scenario {
  Kind kind = Kind::fringe_scan;
  int kind_line = 0;
  std::vector<std::string> echo;
  ScenarioSpec spec;
};

namespace detail {

inline Level read_level(Reader& r, const std::string& key, Level fallback) {
  return r.word(key, to_string(fallback), {"g", "e"}) == "g" ? Level::ground : Level::excited;
}

inline cplx read_complex(Reader& r, const std::string& key, cplx fallback) {
  const double mag = r.number(key, std::abs(fallback));
  const double phase = r.number(key + "_phase", std::arg(fallback));
  return std::polar(1.0, phase) * mag;
}

inline FieldSpec read_field(Reader& r, FieldSpec::Type fallback) {
  static const std::vector<std::string> names{"fock", "coherent", "zero-one", "entangled-bell", "custom"};
  const auto fallback_name = names[static_cast<std::size_t>(fallback)];
  const auto name = r.word("field.type", fallback_name, names);
  FieldSpec f;
  f.type = static_cast<FieldSpec::Type>(std::find(names.begin(), names.end(), name) - names.begin());
  f.theta = r.number("field.theta", 0.0);
  std::size_t need1 = 2, need2 = 2, def = 3;
  switch (f.type) {
    case FieldSpec::Type::fock:
      f.n = r.count("field.n", 1);
      f.mu = r.count("field.mu", 1);
      need1 = f.n + 2;
      need2 = f.mu + 2;
      def = std::max(need1, need2);
      break;
    case FieldSpec::Type::coherent:
      f.alpha = read_complex(r, "field.alpha", 1.0);
      def = 16;
      break;
    case FieldSpec::Type::zero_one:
      f.alpha = read_complex(r, "field.alpha", 0.1);
      break;
    case FieldSpec::Type::entangled_bell:
      break;
    case FieldSpec::Type::custom: {
      if (!r.has("field.amplitudes")) r.fail("field.amplitudes", "is required for a custom field");
      const std::string text = r.raw("field.amplitudes");
      std::size_t pos = 0;
      while (pos <= text.size()) {
        const auto end = std::min(text.find(';', pos), text.size());
        const std::string item = trim(std::string_view(text).substr(pos, end - pos));
        pos = end + 1;
        if (item.empty()) continue;
        std::vector<double> parts;
        std::size_t p = 0;
        try {
          while (p <= item.size()) {
            const auto e = std::min(item.find(',', p), item.size());
            parts.push_back(evaluate_expression(std::string_view(item).substr(p, e - p)));
            p = e + 1;
          }
        } catch (const InvalidArgument& e) {
          r.fail("field.amplitudes", std::string(": ") + e.what());
        }
        if (parts.size() != 4 || parts[0] < 0 || parts[1] < 0 || parts[0] != std::floor(parts[0]) ||
            parts[1] != std::floor(parts[1])) {
          r.fail("field.amplitudes", "entries must read 'n, mu, re, im'");
        }
        const auto n = static_cast<std::size_t>(parts[0]), mu = static_cast<std::size_t>(parts[1]);
        f.amplitudes.push_back({{n, mu}, {parts[2], parts[3]}});
        need1 = std::max(need1, n + 2);
        need2 = std::max(need2, mu + 2);
      }
      if (f.amplitudes.empty()) r.fail("field.amplitudes", "lists no amplitudes");
      def = std::max(need1, need2);
      break;
    }
  }
  f.n1 = r.count("truncation.n1", def, 2);
  f.n2 = r.count("truncation.n2", def, 2);
  if (f.n1 < need1) r.fail("truncation.n1", "must be >= " + std::to_string(need1) + " for this field");
  if (f.n2 < need2) r.fail("truncation.n2", "must be >= " + std::to_string(need2) + " for this field");
  return f;
}

// zoneK.g / zoneK.tau / sequence.detuning / gap.*, each overridable with a
// `prefix.` copy, e.g. atom2.zone1.tau.
inline SequenceConfig read_sequence(Reader& r, const std::string& prefix, std::optional<double> tau_default) {
  auto get = [&](const std::string& key, std::optional<double> fallback, bool nonneg) {
    const std::string local = prefix.empty() ? key : prefix + "." + key;
    if (!prefix.empty() && r.has(local)) {
      if (r.has(key)) r.mark(key);
      return nonneg ? r.nonnegative(local) : r.number(local);
    }
    if (!prefix.empty() && !r.has(key) && fallback) return *fallback;
    return nonneg ? r.nonnegative(key, fallback) : r.number(key, fallback);
  };
  SequenceConfig s;
  s.zone1 = {get("zone1.g", 1.0, true), get("zone1.tau", tau_default, true), 0.0, 1};
  s.zone2 = {get("zone2.g", 1.0, true), get("zone2.tau", tau_default, true), 0.0, 2};
  const double d = get("sequence.detuning", 0.0, false);
  s.zone1.detuning = d;
  s.zone2.detuning = d;
  s.gap.duration = get("gap.T", 0.0, true);
  s.gap.phase_e = get("gap.phi_e", 0.0, false);
  s.gap.phase_g = get("gap.phi_g", 0.0, false);
  return s;
}

inline ScanSpec read_scan(Reader& r, std::vector<std::string> variables) {
  ScanSpec s;
  const auto v = r.word("scan.variable", variables.front(), variables);
  s.variable = v == "delta_T" ? ScanVariable::detuning_gap : v == "theta" ? ScanVariable::field_phase : ScanVariable::phase;
  s.start = r.number("scan.start", 0.0);
  s.stop = r.number("scan.stop", 2.0 * kPi);
  s.points = r.count("scan.points", 64);
  if (s.points < 2) r.fail("scan.points", "must be >= 2");
  s.include_stop = r.flag("scan.include_stop", false);
  return s;
}

inline GapConfig read_phases(Reader& r, const std::string& prefix) {
  GapConfig g;
  g.phase_e = r.number(prefix + ".phi_e", 0.0);
  g.phase_g = r.number(prefix + ".phi_g", 0.0);
  return g;
}

inline AtomAmplitudes read_atom(Reader& r, const std::string& prefix, AtomAmplitudes fallback) {
  const double cg = r.number(prefix + ".cg", std::abs(fallback.ground));
  const double ce = r.number(prefix + ".ce", std::abs(fallback.excited));
  const double phase = r.number(prefix + ".phase", 0.0);
  AtomAmplitudes a{cg, std::polar(ce, phase)};
  if (std::abs(a.norm_squared() - 1.0) > 1e-9) r.fail(prefix + ".cg", "and " + prefix + ".ce must satisfy cg^2 + ce^2 = 1");
  return a;
}

inline Prepare2002Spec read_prepare_2002(Reader& r) {
  Prepare2002Spec p;
  p.g1tau1 = r.nonnegative("protocol.g1tau1", kPi / 4);
  p.g2tau2 = r.nonnegative("protocol.g2tau2", kPi / 2);
  p.gap1 = read_phases(r, "atom1");
  p.gap2 = read_phases(r, "atom2");
  p.couplings.g1 = r.nonnegative("coupling.g1", 1.0);
  p.couplings.g2 = r.nonnegative("coupling.g2", 1.0);
  if (p.couplings.g1 == 0.0 || p.couplings.g2 == 0.0) r.fail("coupling.g1", "and coupling.g2 must be positive");
  return p;
}

}  // namespace detail

inline Scenario parse_scenario(std::string_view text) {
  const Document doc = parse_document(text);
  Reader r(doc);
  Scenario sc;
  sc.echo = doc.echo;
  if (!r.has("kind")) throw ScenarioError("scenario: missing required key kind");
  sc.kind_line = doc.entries.at("kind").line;
  const auto kind = parse_kind(r.raw("kind"));
  if (!kind) r.fail("kind", "'" + doc.entries.at("kind").value + "' is not a known experiment");
  sc.kind = *kind;

  switch (sc.kind) {
    case Kind::fringe_scan: {
      FringeScanSpec s;
      s.field = detail::read_field(r, FieldSpec::Type::fock);
      s.atom = AtomAmplitudes::in(detail::read_level(r, "atom.initial", Level::ground));
      s.detect = detail::read_level(r, "atom.detect", Level::excited);
      s.sequence = detail::read_sequence(r, "", std::nullopt);
      s.scan = detail::read_scan(r, {"phi", "delta_T", "theta"});
      if (s.scan.variable == ScanVariable::detuning_gap) {
        if (s.sequence.zone1.detuning == 0.0) r.fail("scan.variable", "delta_T needs a nonzero sequence.detuning");
        if (s.scan.start / s.sequence.zone1.detuning < 0.0 || s.scan.stop / s.sequence.zone1.detuning < 0.0) {
          r.fail("scan.start", "and scan.stop imply a negative gap for this detuning");
        }
      }
      sc.spec = s;
      break;
    }
    case Kind::two_atom: {
      TwoAtomSpec s;
      s.field = detail::read_field(r, FieldSpec::Type::fock);
      for (std::size_t k = 0; k < 2; ++k) {
        const std::string p = "atom" + std::to_string(k + 1);
        s.atoms[k].input = AtomAmplitudes::in(detail::read_level(r, p + ".initial", Level::ground));
        s.atoms[k].outcome = detail::read_level(r, p + ".detect", Level::excited);
        s.atoms[k].sequence = detail::read_sequence(r, p, std::nullopt);
      }
      s.scan = detail::read_scan(r, {"phi"});
      sc.spec = s;
      break;
    }
    case Kind::prepare_20_02:
      sc.spec = detail::read_prepare_2002(r);
      break;
    case Kind::prepare_303: {
      Prepare303Spec s;
      s.first_two = detail::read_prepare_2002(r);
      s.gap3 = detail::read_phases(r, "atom3");
      s.g1tau1 = r.nonnegative("protocol.third_g1tau1", kPi);
      s.g2tau2 = r.nonnegative("protocol.third_g2tau2", kPi);
      sc.spec = s;
      break;
    }
    case Kind::transfer: {
      TransferSpec s;
      s.alpha = detail::read_complex(r, "field.alpha", std::sqrt(0.5));
      s.beta = detail::read_complex(r, "field.beta", std::sqrt(0.5));
      if (std::abs(std::norm(s.alpha) + std::norm(s.beta) - 1.0) > 1e-9) {
        r.fail("field.alpha", "and field.beta must satisfy |alpha|^2 + |beta|^2 = 1");
      }
      s.first = detail::read_sequence(r, "atom1", kPi / 2);
      s.second = detail::read_sequence(r, "atom2", kPi / 2);
      if (s.first.detuning() != 0.0 || s.second.detuning() != 0.0) r.fail("sequence.detuning", "must be 0 here");
      sc.spec = s;
      break;
    }
    case Kind::decay: {
      DecaySpec s;
      s.kappa1 = r.nonnegative("decay.kappa1");
      s.kappa2 = r.nonnegative("decay.kappa2", s.kappa1);
      s.start = r.nonnegative("scan.start", 0.0);
      s.stop = r.nonnegative("scan.stop", 1.0);
      s.points = r.count("scan.points", 11);
      if (s.points < 2) r.fail("scan.points", "must be >= 2");
      sc.spec = s;
      break;
    }
    case Kind::dispersive_cat: {
      DispersiveCatSpec s;
      s.alpha = detail::read_complex(r, "field.alpha", 1.0);
      s.beta = detail::read_complex(r, "field.beta", 1.0);
      s.atom = detail::read_atom(r, "atom", s.atom);
      s.detect = detail::read_atom(r, "detect", s.detect);
      auto& c = s.config;
      c.g1 = r.nonnegative("dispersive.g1", 1.0);
      c.g2 = r.nonnegative("dispersive.g2", c.g1);
      c.detuning = r.number("dispersive.detuning");
      if (c.detuning == 0.0) r.fail("dispersive.detuning", "must be nonzero");
      // Zone times default to a quarter turn, g^2 tau / Delta = pi/2.
      c.tau1 = r.nonnegative("dispersive.tau1", std::abs(kPi / 2 * c.detuning / (c.g1 * c.g1)));
      c.tau2 = r.nonnegative("dispersive.tau2", std::abs(kPi / 2 * c.detuning / (c.g2 * c.g2)));
      c.gap = r.nonnegative("dispersive.gap", 0.0);
      c.omega_field = r.number("dispersive.omega_field", 0.0);
      c.omega_atom = r.number("dispersive.omega_atom", 0.0);
      if (r.has("dispersive.readout_time")) c.readout_time = r.nonnegative("dispersive.readout_time");
      c.free_evolution = r.flag("dispersive.free_evolution", true);
      try {
        c.validate();
      } catch (const InvalidArgument& e) {
        r.fail("dispersive.detuning", std::string(": ") + e.what());
      }
      s.dim = r.count("truncation.n", 24, 2);
      sc.spec = s;
      break;
    }
    case Kind::beamsplitter: {
      BeamSplitterSpec s;
      const double R = r.number("splitter.reflectivity", 0.5);
      if (R < 0.0 || R > 1.0) r.fail("splitter.reflectivity", "must lie in [0, 1]");
      s.splitter = BeamSplitterConfig::from_reflectivity(R);
      s.splitter.r *= std::polar(1.0, r.number("splitter.r_phase", 0.0));
      s.splitter.t *= std::polar(1.0, r.number("splitter.t_phase", 0.0));
      s.n = r.count("input.n", 1);
      s.mu = r.count("input.mu", 1);
      sc.spec = s;
      break;
    }
  }
  r.finish();
  return sc;
}

// ---------------------------------------------------------------------------
// Results

struct ResultTable {
  std::string kind;
  std::vector<std::string> echo;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, double>> summary;
};

// Least-squares fit y = offset + a cos x + b sin x.
struct CosineFit {
  double offset = 0.0, cos_amplitude = 0.0, sin_amplitude = 0.0;
};

inline CosineFit fit_cosine(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw InvalidArgument("cosine fit needs at least 3 matching samples");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(x.size()), 3);
  Eigen::VectorXd b(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    a(k, 0) = 1.0;
    a(k, 1) = std::cos(x[i]);
    a(k, 2) = std::sin(x[i]);
    b[k] = y[i];
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
  return {c[0], c[1], c[2]};
}

namespace detail {

inline void amplitude_rows(ResultTable& t, const FieldState& f) {
  t.columns = {"n", "mu", "re", "im", "probability"};
  for (std::size_t n = 0; n < f.dim(0); ++n)
    for (std::size_t mu = 0; mu < f.dim(1); ++mu) {
      const cplx a = f(n, mu);
      t.rows.push_back({static_cast<double>(n), static_cast<double>(mu), a.real(), a.imag(), std::norm(a)});
    }
}

inline ResultTable run_fringe_scan(const FringeScanSpec& s, unsigned threads) {
  RamseyScenario rs;
  rs.atom = s.atom;
  rs.detect = s.detect;
  rs.sequence = s.sequence;
  rs.theta = s.field.theta;
  const FieldSpec field = s.field;
  rs.field = [field](double theta) { return field.build(theta); };
  const auto grid = s.scan.grid();
  const FringeCurve c = fringe_scan(rs, s.scan.variable, grid, threads);
  ResultTable t;
  t.columns = {c.variable, c.quantity};
  for (std::size_t i = 0; i < c.x.size(); ++i) t.rows.push_back({c.x[i], c.p[i]});
  const auto [lo, hi] = std::minmax_element(c.p.begin(), c.p.end());
  t.summary = {{"visibility", visibility(c)}, {"p_min", *lo}, {"p_max", *hi}};
  if (field.type == FieldSpec::Type::coherent) t.summary.push_back({"truncation_leakage", field.leakage()});
  return t;
}

inline ResultTable run_two_atom(const TwoAtomSpec& s, unsigned threads) {
  const FieldState f = s.field.build(s.field.theta);
  const auto grid = s.scan.grid();
  const double phi1 = s.atoms[0].sequence.phase();
  const auto p = parallel_map<double>(grid.size(), threads, [&](std::size_t i) {
    auto atoms = s.atoms;
    atoms[1].sequence.gap.phase_e = atoms[1].sequence.gap.phase_g + grid[i];
    return joint_probability(f, atoms);
  });
  ResultTable t;
  t.columns = {"phi2_minus_phi1", "P_joint"};
  std::vector<double> x;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    x.push_back(grid[i] - phi1);
    t.rows.push_back({x.back(), p[i]});
  }
  t.summary.push_back({"visibility", visibility(p)});
  if (grid.size() >= 3) {
    const CosineFit fit = fit_cosine(x, p);
    t.summary.push_back({"fit_offset", fit.offset});
    t.summary.push_back({"fit_cos", fit.cos_amplitude});
    t.summary.push_back({"fit_sin", fit.sin_amplitude});
  }
  // The closed forms cover Fock inputs with ground atoms detected excited,
  // and vacuum inputs with excited atoms detected ground (resonant only).
  const auto& a = s.atoms;
  const bool ge = a[0].input.ground == cplx(1.0) && a[1].input.ground == cplx(1.0) && a[0].outcome == Level::excited &&
                  a[1].outcome == Level::excited;
  const bool eg = a[0].input.excited == cplx(1.0) && a[1].input.excited == cplx(1.0) && a[0].outcome == Level::ground &&
                  a[1].outcome == Level::ground;
  if (s.field.type == FieldSpec::Type::fock && ge) {
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      auto seq2 = a[1].sequence;
      seq2.gap.phase_e = seq2.gap.phase_g + grid[i];
      worst = std::max(worst, std::abs(fock_joint_closed_form(s.field.n, s.field.mu, a[0].sequence, seq2) - p[i]));
    }
    t.summary.push_back({"closed_form_max_deviation", worst});
  } else if (s.field.type == FieldSpec::Type::fock && s.field.n == 0 && s.field.mu == 0 && eg &&
             a[0].sequence.detuning() == 0.0 && a[1].sequence.detuning() == 0.0) {
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      auto seq2 = a[1].sequence;
      seq2.gap.phase_e = seq2.gap.phase_g + grid[i];
      worst = std::max(worst, std::abs(both_excited_closed_form(a[0].sequence, seq2) - p[i]));
    }
    t.summary.push_back({"closed_form_max_deviation", worst});
  }
  return t;
}

// `target_phase` is the phase of |0,k> relative to |k,0> in the ideal state.
inline void prepared_summary(ResultTable& t, const PreparedField& p, std::size_t k, double target_phase) {
  t.summary.push_back({"relative_phase", p.relative_phase});
  t.summary.push_back({"entropy", entropy(partial_trace(p.field, Subsystem::mode1))});
  t.summary.push_back({"noon_fidelity", fidelity(p.field, noon_state(k, target_phase, p.field.dim(0), p.field.dim(1)))});
}

inline ResultTable run_prepare_2002(const Prepare2002Spec& s) {
  const PreparedField p = prepare_20_02(s.g1tau1, s.g2tau2, s.gap1, s.gap2, s.couplings);
  ResultTable t;
  amplitude_rows(t, p.field);
  t.summary.push_back({"probability", p.probability});
  // (|2,0> - e^{i Theta}|0,2>)/sqrt2
  prepared_summary(t, p, 2, p.relative_phase + kPi);
  return t;
}

inline ResultTable run_prepare_303(const Prepare303Spec& s) {
  const auto& a = s.first_two;
  const PreparedField two = prepare_20_02(a.g1tau1, a.g2tau2, a.gap1, a.gap2, a.couplings);
  const PreparedField three = prepare_303(two.field, s.gap3, s.g1tau1, s.g2tau2, a.couplings);
  ResultTable t;
  amplitude_rows(t, three.field);
  t.summary.push_back({"probability_two_photon", two.probability});
  t.summary.push_back({"probability_three_photon", three.probability});
  t.summary.push_back({"probability", two.probability * three.probability});
  prepared_summary(t, three, 3, three.relative_phase);
  return t;
}

inline ResultTable run_transfer(const TransferSpec& s) {
  const TwoAtomState out = transfer_entanglement(s.alpha, s.beta, s.first, s.second);
  ResultTable t;
  t.columns = {"atom1", "atom2", "n", "mu", "re", "im", "probability"};
  for (std::size_t f = 0; f < out.size(); ++f) {
    const auto idx = out.unflatten(f);
    const cplx a = out.amplitudes()[static_cast<Eigen::Index>(f)];
    t.rows.push_back({static_cast<double>(idx[0]), static_cast<double>(idx[1]), static_cast<double>(idx[2]),
                      static_cast<double>(idx[3]), a.real(), a.imag(), std::norm(a)});
  }
  const FieldState field = field_from_amplitudes(2, 2, {{{0, 1}, s.alpha}, {{1, 0}, s.beta}});
  t.summary.push_back({"field_entropy", entropy(partial_trace(field, Subsystem::mode1))});
  t.summary.push_back({"atom_entropy", entropy(partial_trace(out, std::vector<std::size_t>{0}))});
  t.summary.push_back({"atom_pair_purity", purity(atom_pair_state(out))});
  t.summary.push_back({"weight_field_vacuum", std::norm(out.at({1, 0, 0, 0})) + std::norm(out.at({0, 1, 0, 0})) +
                                                  std::norm(out.at({0, 0, 0, 0})) + std::norm(out.at({1, 1, 0, 0}))});
  return t;
}

inline ResultTable run_decay(const DecaySpec& s, unsigned threads) {
  const auto grid = uniform_grid(s.start, s.stop, s.points, true);
  const DensityMatrix rho0 = density_matrix(bell_field());
  const auto rows = parallel_map<std::vector<double>>(grid.size(), threads, [&](std::size_t i) {
    const DecayConfig cfg{s.kappa1, s.kappa2, grid[i]};
    const DensityMatrix num = lindblad_evolve(rho0, cfg);
    const DensityMatrix exact = analytic_decay(cfg);
    const double dev = (num.matrix() - exact.matrix()).cwiseAbs().maxCoeff();
    return std::vector<double>{grid[i], fidelity(num, bell_field()), protocol_fidelity_under_decay(cfg), dev,
                               num.trace()};
  });
  ResultTable t;
  t.columns = {"t", "fidelity_lindblad", "fidelity_analytic", "max_deviation", "trace"};
  t.rows = rows;
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r[3]);
  t.summary.push_back({"max_deviation", worst});
  return t;
}

inline ResultTable run_dispersive_cat(const DispersiveCatSpec& s) {
  const auto prepared = prepare_cat(s.alpha, s.beta, s.atom, s.detect, s.config, s.dim);
  const CatBranch branch = cat_branch(s.alpha, s.beta, s.atom, s.detect, s.config);
  ResultTable t;
  t.columns = {"total_photons", "probability"};
  t.summary.push_back({"probability", prepared.probability});
  t.summary.push_back({"probability_analytic", branch.probability()});
  t.summary.push_back({"validity", dispersive_validity(s.config, s.dim - 1)});
  t.summary.push_back({"truncation_leakage",
                       make_coherent(s.alpha, s.dim).leakage + make_coherent(s.beta, s.dim).leakage});
  if (!prepared.possible()) throw ZeroProbability("dispersive-cat: detection branch has zero probability");
  const FieldState& f = *prepared.state;
  std::vector<double> dist(2 * s.dim - 1, 0.0);
  for (std::size_t n = 0; n < s.dim; ++n)
    for (std::size_t mu = 0; mu < s.dim; ++mu) dist[n + mu] += std::norm(f(n, mu));
  for (std::size_t k = 0; k < dist.size(); ++k) t.rows.push_back({static_cast<double>(k), dist[k]});
  t.summary.push_back({"fidelity_analytic", fidelity(f, branch.state(s.dim, s.dim))});
  return t;
}

inline ResultTable run_beamsplitter(const BeamSplitterSpec& s) {
  const std::size_t dim = s.n + s.mu + 1;
  const FieldState out = bs_apply(tensor(make_fock(s.n, dim), make_fock(s.mu, dim)), s.splitter);
  ResultTable t;
  amplitude_rows(t, out);
  const cplx c = cross_expectation(out);
  const cplx q = bs_cross_correlation_quoted(s.splitter);
  t.summary = {{"cross_correlation_re", c.real()}, {"cross_correlation_im", c.imag()},
               {"quoted_cross_correlation_re", q.real()}, {"quoted_cross_correlation_im", q.imag()}};
  return t;
}

}  // namespace detail

// Physics errors come back with the experiment kind prefixed; numerical
// failures keep their type so callers can map them to exit code 3.
inline ResultTable run(const Scenario& sc, unsigned threads = 1) {
  ResultTable t;
  try {
    t = std::visit(
        [&](const auto& s) -> ResultTable {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, FringeScanSpec>) return detail::run_fringe_scan(s, threads);
          else if constexpr (std::is_same_v<T, TwoAtomSpec>) return detail::run_two_atom(s, threads);
          else if constexpr (std::is_same_v<T, Prepare2002Spec>) return detail::run_prepare_2002(s);
          else if constexpr (std::is_same_v<T, Prepare303Spec>) return detail::run_prepare_303(s);
          else if constexpr (std::is_same_v<T, TransferSpec>) return detail::run_transfer(s);
          else if constexpr (std::is_same_v<T, DecaySpec>) return detail::run_decay(s, threads);
          else if constexpr (std::is_same_v<T, DispersiveCatSpec>) return detail::run_dispersive_cat(s);
          else return detail::run_beamsplitter(s);
        },
        sc.spec);
  } catch (const TruncationOverflow& e) {
    throw TruncationOverflow(std::string(to_string(sc.kind)) + ": " + e.what());
  } catch (const ZeroProbability& e) {
    throw ZeroProbability(std::string(to_string(sc.kind)) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(to_string(sc.kind)) + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw ScenarioError(std::string("scenario: ") + to_string(sc.kind) + ": " + e.what());
  } catch (const OutOfRange& e) {
    throw ScenarioError(std::string("scenario: ") + to_string(sc.kind) + ": " + e.what());
  }
  t.kind = to_string(sc.kind);
  t.echo = sc.echo;
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size()) throw NumericalError("result table is not rectangular");
    for (double v : row)
      if (!std::isfinite(v)) throw NumericalError(t.kind + ": result contains a non-finite value");
  }
  for (const auto& [name, v] : t.summary)
    if (!std::isfinite(v)) throw NumericalError(t.kind + ": summary " + name + " is not finite");
  return t;
}

// Comment lines carry the version and the scenario echo; summary values
// follow the data as comments too, so the body stays a plain CSV table.
inline std::string to_csv(const ResultTable& t) {
  std::string out = std::string("# ramseylab ") + kVersion + "\n";
  for (const auto& line : t.echo) out += "# " + line + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + detail::format_number(row[i]);
    out += "\n";
  }
  for (const auto& [name, v] : t.summary) out += "# summary: " + name + " = " + detail::format_number(v) + "\n";
  return out;
}

}  // namespace ramseylab
