// Command line driver. Subcommands map one-to-one onto library entry points;
// floating-point fields print with 17 significant digits so values round-trip
// exactly, JSON keys keep a fixed order, and nothing machine- or time-varying
// enters the output, so identical invocations are byte-identical.
//
// Exit codes: 0 success, 1 usage error (help is printed), 2 precondition
// violation, 3 non-convergence of a truncated sum or quadrature cross-check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "traceform/arith.hpp"
#include "traceform/bessel.hpp"
#include "traceform/density.hpp"
#include "traceform/eigen_json.hpp"
#include "traceform/kloosterman.hpp"
#include "traceform/newform_sums.hpp"
#include "traceform/oracles.hpp"
#include "traceform/petersson.hpp"

namespace {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using traceform::arith::FactoredInteger;
namespace nfs = traceform::newform_sums;
namespace dens = traceform::density;

constexpr const char* kToolVersion = "0.1.0";

std::string fmt(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(bool b) { return b ? "true" : "false"; }

template <class T>
  requires(std::integral<T> && !std::same_as<T, bool>)
std::string fmt(T v) {
  return std::to_string(v);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') {
      out += '\\';
      out += ch;
    } else if (static_cast<unsigned char>(ch) < 0x20) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(ch));
      out += buf;
    } else {
      out += ch;
    }
  }
  return out + "\"";
}

// Order-preserving JSON tree; objects and arrays reuse the same child list.
struct JsonValue {
  enum class Kind { scalar, object, array };
  Kind kind = Kind::scalar;
  std::string scalar = "null";
  std::vector<std::pair<std::string, JsonValue>> fields;

  JsonValue() = default;
  explicit JsonValue(std::string rendered) : scalar(std::move(rendered)) {}
  void add(const std::string& key, JsonValue v) { fields.emplace_back(key, std::move(v)); }
  void add(const std::string& key, std::string rendered) {
    fields.emplace_back(key, JsonValue(std::move(rendered)));
  }
};

JsonValue obj() {
  JsonValue v;
  v.kind = JsonValue::Kind::object;
  return v;
}

JsonValue arr() {
  JsonValue v;
  v.kind = JsonValue::Kind::array;
  return v;
}

std::string render(const JsonValue& v) {
  if (v.kind == JsonValue::Kind::scalar) return v.scalar;
  std::string out(v.kind == JsonValue::Kind::object ? "{" : "[");
  bool first = true;
  for (const auto& [key, child] : v.fields) {
    if (!first) out += ",";
    first = false;
    if (v.kind == JsonValue::Kind::object) out += quote(key) + ":";
    out += render(child);
  }
  out += v.kind == JsonValue::Kind::object ? "}" : "]";
  return out;
}

// Dotted-path flattening for single-record CSV output. String scalars lose
// their JSON quotes; none of the emitted strings contain commas.
void flatten(const std::string& prefix, const JsonValue& v,
             std::vector<std::pair<std::string, std::string>>& out) {
  if (v.kind == JsonValue::Kind::scalar) {
    std::string cell = v.scalar;
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
      cell = cell.substr(1, cell.size() - 2);
    }
    out.emplace_back(prefix, cell);
    return;
  }
  for (const auto& [key, child] : v.fields) {
    flatten(prefix.empty() ? key : prefix + "." + key, child, out);
  }
}

struct Common {
  std::string format = "json";
  bool manifest = false;
  unsigned threads = 0;  // 0 resolves to available parallelism
  std::string config_path;
};

unsigned resolved_threads(const Common& c) {
  if (c.threads > 0) return c.threads;
  unsigned h = std::thread::hardware_concurrency();
  return h > 0 ? h : 1;
}

void add_common(CLI::App* sub, Common& c, const char* default_format = "json") {
  c.format = default_format;
  sub->add_option("--format", c.format, std::string("output format (default ") + default_format + ")")
      ->check(CLI::IsMember({"json", "csv"}));
  sub->add_flag("--manifest", c.manifest, "include a run manifest in the output");
  sub->add_option("--threads", c.threads,
                  "worker threads; default = available parallelism, 1 = canonical serial");
  sub->add_option("--config", c.config_path,
                  "plain key=value file; command-line flags override file values");
}

// Expands `--config FILE` into explicit option tokens inserted right after
// the subcommand name. Keys already present on the command line are skipped,
// which is what makes explicit flags override file values.
std::vector<std::string> expand_config_tokens(int argc, char** argv) {
  std::vector<std::string> tokens(argv + 1, argv + argc);
  if (tokens.empty() || tokens.front().empty() || tokens.front()[0] == '-') return tokens;

  std::string path;
  std::vector<std::string> given;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (t.rfind("--", 0) != 0) continue;
    std::string name = t.substr(0, t.find('='));
    given.push_back(name);
    if (name == "--config") {
      if (t.find('=') != std::string::npos) {
        path = t.substr(t.find('=') + 1);
      } else if (i + 1 < tokens.size()) {
        path = tokens[i + 1];
      }
    }
  }
  if (path.empty()) return tokens;

  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open file " + path);
  auto strip = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::vector<std::string> inject;
  std::string line;
  while (std::getline(in, line)) {
    line = strip(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: expected key=value, got \"" + line + "\"");
    }
    std::string key = strip(line.substr(0, eq));
    std::string val = strip(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config: empty key in \"" + line + "\"");
    if (key == "config") continue;
    std::string name = "--" + key;
    if (std::find(given.begin(), given.end(), name) != given.end()) continue;
    if (key == "manifest") {
      if (val == "true" || val == "1" || val == "yes") inject.push_back(name);
      continue;
    }
    inject.push_back(name);
    inject.push_back(val);
  }
  tokens.insert(tokens.begin() + 1, inject.begin(), inject.end());
  return tokens;
}

using KV = std::vector<std::pair<std::string, std::string>>;

JsonValue make_manifest(const std::string& command, const Common& c, const KV& parameters,
                        const KV& truncation = {}) {
  JsonValue m = obj();
  m.add("tool", quote("traceform"));
  m.add("version", quote(kToolVersion));
  m.add("schema", quote("1"));
  m.add("command", quote(command));
  m.add("threads", fmt(resolved_threads(c)));
  JsonValue p = obj();
  for (const auto& [k, v] : parameters) p.add(k, v);
  m.add("parameters", std::move(p));
  if (!truncation.empty()) {
    JsonValue t = obj();
    for (const auto& [k, v] : truncation) t.add(k, v);
    m.add("truncation", std::move(t));
  }
  return m;
}

// Prints a single JSON record, or its flattened CSV twin. The manifest rides
// as a trailing JSON key, or as a leading comment line in CSV mode.
void emit_record(JsonValue root, const Common& c, const JsonValue& manifest) {
  if (c.format == "csv") {
    if (c.manifest) std::cout << "# " << render(manifest) << "\n";
    std::vector<std::pair<std::string, std::string>> cells;
    flatten("", root, cells);
    for (std::size_t i = 0; i < cells.size(); ++i) std::cout << (i ? "," : "") << cells[i].first;
    std::cout << "\n";
    for (std::size_t i = 0; i < cells.size(); ++i) std::cout << (i ? "," : "") << cells[i].second;
    std::cout << "\n";
  } else {
    if (c.manifest) root.add("manifest", manifest);
    std::cout << render(root) << "\n";
  }
}

JsonValue schema_root() {
  JsonValue root = obj();
  root.add("schema", quote("1"));
  return root;
}

// ---------------------------------------------------------------------------
// Subcommand parameter blocks and runners.

struct KloostermanArgs {
  Common c;
  i64 m = 0, n = 0;
  u64 modulus = 0;
};

int run_kloosterman(const KloostermanArgs& a) {
  double v = traceform::kloosterman::kloosterman(a.m, a.n, a.modulus);
  if (a.c.manifest) {
    KV p{{"m", fmt(a.m)}, {"n", fmt(a.n)}, {"c", fmt(a.modulus)}};
    std::cout << "# " << render(make_manifest("kloosterman", a.c, p)) << "\n";
  }
  std::cout << fmt(v) << "\n";
  return 0;
}

struct BesseljArgs {
  Common c;
  int nu = 0;
  double x = 0.0;
};

int run_besselj(const BesseljArgs& a) {
  double v = traceform::bessel::bessel_j(a.nu, a.x);
  JsonValue root = schema_root();
  root.add("value", fmt(v));
  emit_record(std::move(root), a.c, make_manifest("besselj", a.c, {{"nu", fmt(a.nu)}, {"x", fmt(a.x)}}));
  return 0;
}

struct DeltaArgs {
  Common c;
  int k = 0;
  u64 N = 1, m = 1, n = 1;
  double tol = 1e-8;
  u64 cmax = 0;
  bool cmax_given = false;
};

int run_delta(const DeltaArgs& a) {
  traceform::petersson::TruncationPolicy pol;
  pol.threads = resolved_threads(a.c);
  if (a.cmax_given) {
    pol.mode = traceform::petersson::TruncationMode::fixed_cmax;
    pol.c_max = a.cmax;
  } else {
    pol.tol = a.tol;
  }
  auto r = traceform::petersson::delta_full(a.k, a.N, a.m, a.n, pol);
  JsonValue root = schema_root();
  root.add("value", fmt(r.value));
  root.add("tail_bound", fmt(r.tail_bound));
  root.add("terms_used", fmt(r.terms_used));
  root.add("converged", fmt(r.converged));
  KV p{{"k", fmt(a.k)}, {"N", fmt(a.N)}, {"m", fmt(a.m)}, {"n", fmt(a.n)}};
  KV t{{"mode", a.cmax_given ? quote("fixed_cmax") : quote("target_tolerance")},
       {"tol", fmt(a.tol)},
       {"cmax", fmt(a.cmax)},
       {"hard_cap", fmt(pol.hard_cap)},
       {"terms_used", fmt(r.terms_used)}};
  emit_record(std::move(root), a.c, make_manifest("delta", a.c, p, t));
  return r.converged ? 0 : 3;
}

struct PuresumArgs {
  Common c;
  int k = 0;
  u64 N = 1, n = 1, X = 0, Y = 0;
  double tol = 1e-8;
};

int run_puresum_or_card(const PuresumArgs& a, bool card_mode) {
  nfs::PureSumOptions opt;
  opt.X = a.X;
  opt.Y = a.Y;
  opt.policy.tol = a.tol;
  opt.policy.threads = resolved_threads(a.c);
  nfs::DeltaCache cache;
  opt.cache = &cache;
  FactoredInteger N = FactoredInteger::factor(a.N);

  JsonValue root = schema_root();
  nfs::PureSumResult s;
  if (card_mode || a.n == 1) {
    auto ce = nfs::cardinality_estimate(a.k, N, opt);
    s = ce.sum;
    root.add("value", fmt(s.value));
    root.add("tail_bound", fmt(s.tail_bound));
    root.add("heuristic_bound", fmt(s.heuristic_bound));
    root.add("main_term", fmt(ce.main_term));
    root.add("sandwich_lo", fmt(ce.sandwich_lo));
    root.add("sandwich_hi", fmt(ce.sandwich_hi));
    root.add("oracle_dim", fmt(ce.oracle_dim));
    root.add("rounded", fmt(ce.rounded));
    root.add("converged", fmt(s.converged));
  } else {
    s = nfs::pure_sum(a.k, N, a.n, opt);
    root.add("value", fmt(s.value));
    root.add("tail_bound", fmt(s.tail_bound));
    root.add("heuristic_bound", fmt(s.heuristic_bound));
    root.add("converged", fmt(s.converged));
  }
  const char* name = card_mode ? "card" : "puresum";
  KV p{{"k", fmt(a.k)}, {"N", fmt(a.N)}, {"n", fmt(card_mode ? u64(1) : a.n)}};
  KV t{{"X", fmt(a.X)},       {"Y", fmt(a.Y)},           {"y_used", fmt(s.y_used)},
       {"tol", fmt(a.tol)},   {"terms_used", fmt(s.terms_used)},
       {"oscillation", fmt(s.oscillation)}};
  emit_record(std::move(root), a.c, make_manifest(name, a.c, p, t));
  return s.converged ? 0 : 3;
}

struct TauArgs {
  Common c;
  u64 max = 1;
};

int run_tau(const TauArgs& a) {
  auto table = traceform::oracles::ramanujan_tau_table(a.max);
  if (a.c.manifest) {
    std::cout << "# " << render(make_manifest("tau", a.c, {{"max", fmt(a.max)}})) << "\n";
  }
  if (a.c.format == "csv") {
    std::cout << "n,tau\n";
    for (std::size_t i = 0; i < table.size(); ++i) {
      std::cout << (i + 1) << "," << table[i] << "\n";
    }
  } else {
    std::ostringstream rows;
    rows << "{";
    for (std::size_t i = 0; i < table.size(); ++i) {
      rows << (i ? "," : "") << "\"" << (i + 1) << "\":" << table[i];
    }
    rows << "}";
    JsonValue root = schema_root();
    root.add("tau", rows.str());
    std::cout << render(root) << "\n";
  }
  return 0;
}

struct DimArgs {
  Common c;
  int k = 0;
  u64 N = 1;
};

int run_dim(const DimArgs& a, bool new_only) {
  FactoredInteger N = FactoredInteger::factor(a.N);
  i64 v = new_only ? traceform::oracles::newform_dim(a.k, N) : traceform::oracles::dim_cusp(a.k, N);
  JsonValue root = schema_root();
  root.add("value", fmt(v));
  const char* name = new_only ? "newdim" : "dim";
  emit_record(std::move(root), a.c, make_manifest(name, a.c, {{"k", fmt(a.k)}, {"N", fmt(a.N)}}));
  return 0;
}

struct DensityArgs {
  Common c;
  int k = 0;
  u64 N = 1, X = 0, Y = 0;
  double sigma = 1.0, u = 0.5, R = 0.0, tol = 1e-8;
};

JsonValue rmt_block(const dens::TestFunction& f) {
  JsonValue rmt = obj();
  for (auto g : dens::kAllGroups) {
    rmt.add(dens::group_name(g), fmt(dens::rmt_integral(g, f)));
  }
  return rmt;
}

int run_density(const DensityArgs& a) {
  dens::DensityConfig cfg;
  cfg.k = a.k;
  cfg.N = FactoredInteger::factor(a.N);
  cfg.R = a.R;
  cfg.u = a.u;
  cfg.X = a.X;
  cfg.Y = a.Y;
  cfg.policy.tol = a.tol;
  cfg.policy.threads = resolved_threads(a.c);
  dens::TestFunction f = dens::fejer_pair(a.sigma);

  nfs::DeltaCache cache;
  auto est = dens::one_level_estimate(cfg, f, &cache);

  JsonValue root = schema_root();
  root.add("E", fmt(est.E));
  JsonValue ps = obj();
  ps.add("value", fmt(est.prime_sum.value));
  ps.add("tail_bound", fmt(est.prime_sum.tail_bound));
  ps.add("converged", fmt(est.prime_sum.converged));
  root.add("Pstar", std::move(ps));
  root.add("card", fmt(est.card));
  root.add("D1", fmt(est.D1));
  root.add("rmt", rmt_block(f));
  root.add("heuristic_error", fmt(est.prime_sum.heuristic_bound / static_cast<double>(est.card)));

  KV p{{"k", fmt(a.k)},         {"N", fmt(a.N)}, {"sigma", fmt(a.sigma)}, {"u", fmt(a.u)},
       {"R", fmt(dens::detail::effective_R(cfg))}};
  KV t{{"X", fmt(a.X)},
       {"Y", fmt(a.Y)},
       {"tol", fmt(a.tol)},
       {"terms_used", fmt(est.prime_sum.terms_used)},
       {"heuristic_bound", fmt(est.prime_sum.heuristic_bound)}};
  emit_record(std::move(root), a.c, make_manifest("density", a.c, p, t));
  return est.prime_sum.converged ? 0 : 3;
}

struct RmtArgs {
  Common c;
  std::string group = "U";
  double sigma = 1.0;
};

int run_rmt(const RmtArgs& a) {
  dens::Group g = dens::parse_group(a.group);
  dens::TestFunction f = dens::fejer_pair(a.sigma);
  double time_side = dens::rmt_integral_time(g, f);
  double fourier_side = dens::rmt_integral_fourier(g, f);
  JsonValue root = schema_root();
  root.add("time_side", fmt(time_side));
  root.add("fourier_side", fmt(fourier_side));
  emit_record(std::move(root), a.c,
              make_manifest("rmt", a.c, {{"group", quote(a.group)}, {"sigma", fmt(a.sigma)}}));
  return 0;
}

struct GridArgs {
  Common c;
  std::string spec_path;
};

struct GridSpec {
  int k = 0;
  double sigma = 0.0, u = 0.0, R = 0.0, tol = 1e-8;
  u64 X = 0, Y = 0;
  std::vector<u64> levels;
};

GridSpec parse_grid_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("density-grid: cannot open spec file " + path);
  GridSpec g;
  bool have_k = false, have_sigma = false, have_u = false;
  std::string line;
  while (std::getline(in, line)) {
    auto strip = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = strip(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("density-grid: expected key=value, got \"" + line + "\"");
    }
    std::string key = strip(line.substr(0, eq));
    std::string val = strip(line.substr(eq + 1));
    try {
      if (key == "k") {
        g.k = std::stoi(val);
        have_k = true;
      } else if (key == "sigma") {
        g.sigma = std::stod(val);
        have_sigma = true;
      } else if (key == "u") {
        g.u = std::stod(val);
        have_u = true;
      } else if (key == "R") {
        g.R = std::stod(val);
      } else if (key == "tol") {
        g.tol = std::stod(val);
      } else if (key == "X") {
        g.X = std::stoull(val);
      } else if (key == "Y") {
        g.Y = std::stoull(val);
      } else if (key == "N") {
        std::string item;
        for (char ch : val + ",") {
          if (ch == ',' || ch == ' ' || ch == '\t') {
            if (!item.empty()) g.levels.push_back(std::stoull(item));
            item.clear();
          } else {
            item += ch;
          }
        }
      } else {
        throw std::invalid_argument("density-grid: unknown key \"" + key + "\"");
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("density-grid: bad value for key \"" + key + "\": " + val);
    }
  }
  if (!have_k || !have_sigma || !have_u || g.levels.empty()) {
    throw std::invalid_argument("density-grid: spec must set k, sigma, u, and a nonempty N list");
  }
  return g;
}

int run_density_grid(const GridArgs& a) {
  GridSpec g = parse_grid_spec(a.spec_path);
  dens::TestFunction f = dens::fejer_pair(g.sigma);
  nfs::DeltaCache cache;

  std::vector<dens::OneLevelEstimate> rows;
  bool all_converged = true;
  for (u64 N : g.levels) {
    dens::DensityConfig cfg;
    cfg.k = g.k;
    cfg.N = FactoredInteger::factor(N);
    cfg.R = g.R;
    cfg.u = g.u;
    cfg.X = g.X;
    cfg.Y = g.Y;
    cfg.policy.tol = g.tol;
    cfg.policy.threads = resolved_threads(a.c);
    rows.push_back(dens::one_level_estimate(cfg, f, &cache));
    all_converged = all_converged && rows.back().prime_sum.converged;
  }

  KV p{{"spec", quote(a.spec_path)}, {"k", fmt(g.k)},     {"sigma", fmt(g.sigma)},
       {"u", fmt(g.u)},              {"R", fmt(g.R)},     {"tol", fmt(g.tol)},
       {"X", fmt(g.X)},              {"Y", fmt(g.Y)}};
  JsonValue manifest = make_manifest("density-grid", a.c, p);
  manifest.add("rmt", rmt_block(f));

  auto row_json = [&](std::size_t i) {
    const auto& e = rows[i];
    JsonValue r = obj();
    r.add("N", fmt(g.levels[i]));
    r.add("card", fmt(e.card));
    r.add("E", fmt(e.E));
    r.add("Pstar", fmt(e.prime_sum.value));
    r.add("Pstar_over_card", fmt(e.P_star_over_card));
    r.add("D1", fmt(e.D1));
    r.add("tail_bound", fmt(e.prime_sum.tail_bound));
    r.add("heuristic_error", fmt(e.prime_sum.heuristic_bound / static_cast<double>(e.card)));
    r.add("converged", fmt(e.prime_sum.converged));
    return r;
  };

  if (a.c.format == "json") {
    JsonValue root = schema_root();
    JsonValue list = arr();
    for (std::size_t i = 0; i < rows.size(); ++i) list.add("", row_json(i));
    root.add("rows", std::move(list));
    if (a.c.manifest) root.add("manifest", std::move(manifest));
    std::cout << render(root) << "\n";
  } else {
    if (a.c.manifest) std::cout << "# " << render(manifest) << "\n";
    bool header = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::vector<std::pair<std::string, std::string>> cells;
      flatten("", row_json(i), cells);
      if (!header) {
        for (std::size_t j = 0; j < cells.size(); ++j) std::cout << (j ? "," : "") << cells[j].first;
        std::cout << "\n";
        header = true;
      }
      for (std::size_t j = 0; j < cells.size(); ++j) std::cout << (j ? "," : "") << cells[j].second;
      std::cout << "\n";
    }
  }
  return all_converged ? 0 : 3;
}

struct DeltastarArgs {
  Common c;
  int k = 0;
  u64 N = 1, m = 1, n = 1;
  std::string eigen_path;
};

int run_deltastar(const DeltastarArgs& a) {
  auto forms = traceform::eigen_json::load_file(a.eigen_path);
  double v = nfs::delta_star_weighted_via_eigendata(a.k, FactoredInteger::factor(a.N), a.m, a.n, forms);
  JsonValue root = schema_root();
  root.add("value", fmt(v));
  root.add("forms_used", fmt(forms.size()));
  KV p{{"k", fmt(a.k)},
       {"N", fmt(a.N)},
       {"m", fmt(a.m)},
       {"n", fmt(a.n)},
       {"eigen_data", quote(a.eigen_path)}};
  emit_record(std::move(root), a.c, make_manifest("deltastar", a.c, p));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "traceform: harmonic averages of Hecke eigenvalues over holomorphic newform families\n"
      "via the Petersson formula, with Kloosterman/Bessel building blocks, dimension\n"
      "oracles, and one-level density diagnostics against random-matrix kernels."};
  app.require_subcommand(1);

  int rc = 0;

  KloostermanArgs kl;
  auto* s_kl = app.add_subcommand("kloosterman", "Kloosterman sum S(m,n;c), printed as plain decimal text");
  s_kl->add_option("--m", kl.m, "first index")->required();
  s_kl->add_option("--n", kl.n, "second index")->required();
  s_kl->add_option("--c", kl.modulus, "modulus, c >= 1")->required();
  add_common(s_kl, kl.c);
  s_kl->callback([&] { rc = run_kloosterman(kl); });

  BesseljArgs bj;
  auto* s_bj = app.add_subcommand("besselj", "Bessel function J_nu(x) of integer order");
  s_bj->add_option("--nu", bj.nu, "order, 0 <= nu <= 10000")->required();
  s_bj->add_option("--x", bj.x, "argument, x >= 0")->required();
  add_common(s_bj, bj.c);
  s_bj->callback([&] { rc = run_besselj(bj); });

  DeltaArgs dl;
  auto* s_dl = app.add_subcommand("delta", "Petersson average Delta_{k,N}(m,n) over S_k(N)");
  s_dl->add_option("--k", dl.k, "weight, even and >= 4")->required();
  s_dl->add_option("--N", dl.N, "level")->required();
  s_dl->add_option("--m", dl.m, "first index")->required();
  s_dl->add_option("--n", dl.n, "second index")->required();
  auto* o_tol = s_dl->add_option("--tol", dl.tol, "target tail bound (default 1e-8)");
  auto* o_cmax = s_dl->add_option("--cmax", dl.cmax, "fixed largest modulus instead of a tolerance");
  o_tol->excludes(o_cmax);
  o_cmax->excludes(o_tol);
  add_common(s_dl, dl.c);
  s_dl->callback([&] {
    dl.cmax_given = o_cmax->count() > 0;
    rc = run_delta(dl);
  });

  PuresumArgs ps;
  auto* s_ps = app.add_subcommand("puresum", "newform average Delta*_{k,N}(n) for n coprime to N");
  s_ps->add_option("--k", ps.k, "weight, even and >= 4")->required();
  s_ps->add_option("--N", ps.N, "level")->required();
  s_ps->add_option("--n", ps.n, "index, coprime to N")->required();
  s_ps->add_option("--X", ps.X, "divisor cut (0 = all divisors)");
  s_ps->add_option("--Y", ps.Y, "m-sum cut (0 = smallness-regime default)");
  s_ps->add_option("--tol", ps.tol, "per-average tail target (default 1e-8)");
  add_common(s_ps, ps.c);
  s_ps->callback([&] { rc = run_puresum_or_card(ps, false); });

  PuresumArgs cd;
  auto* s_cd = app.add_subcommand("card", "harmonic cardinality Delta*_{k,N}(1) with the closed main term");
  s_cd->add_option("--k", cd.k, "weight, even and >= 4")->required();
  s_cd->add_option("--N", cd.N, "level")->required();
  s_cd->add_option("--X", cd.X, "divisor cut (0 = all divisors)");
  s_cd->add_option("--Y", cd.Y, "m-sum cut (0 = smallness-regime default)");
  s_cd->add_option("--tol", cd.tol, "per-average tail target (default 1e-8)");
  add_common(s_cd, cd.c);
  s_cd->callback([&] { rc = run_puresum_or_card(cd, true); });

  TauArgs ta;
  auto* s_ta = app.add_subcommand("tau", "Ramanujan tau(n) for n = 1..max, as exact integers");
  s_ta->add_option("--max", ta.max, "largest index")->required()->check(CLI::PositiveNumber);
  add_common(s_ta, ta.c, "csv");
  s_ta->callback([&] { rc = run_tau(ta); });

  DimArgs di;
  auto* s_di = app.add_subcommand("dim", "dimension of the cusp space S_k(N)");
  s_di->add_option("--k", di.k, "weight, even and >= 4")->required();
  s_di->add_option("--N", di.N, "level")->required();
  add_common(s_di, di.c);
  s_di->callback([&] { rc = run_dim(di, false); });

  DimArgs nd;
  auto* s_nd = app.add_subcommand("newdim", "dimension of the new subspace of S_k(N)");
  s_nd->add_option("--k", nd.k, "weight, even and >= 4")->required();
  s_nd->add_option("--N", nd.N, "level")->required();
  add_common(s_nd, nd.c);
  s_nd->callback([&] { rc = run_dim(nd, true); });

  DensityArgs de;
  auto* s_de = app.add_subcommand("density", "one-level density estimate with random-matrix references");
  s_de->add_option("--k", de.k, "weight, even and >= 4")->required();
  s_de->add_option("--N", de.N, "level")->required();
  s_de->add_option("--sigma", de.sigma, "support half-width of the Fejer test function")->required();
  s_de->add_option("--u", de.u, "prime cut exponent: primes up to R^u")->required();
  s_de->add_option("--R", de.R, "scaling parameter (0 = default k^2 N)");
  s_de->add_option("--X", de.X, "divisor cut forwarded to the newform averages");
  s_de->add_option("--Y", de.Y, "m-sum cut forwarded to the newform averages");
  s_de->add_option("--tol", de.tol, "per-average tail target (default 1e-8)");
  add_common(s_de, de.c);
  s_de->callback([&] { rc = run_density(de); });

  RmtArgs rm;
  auto* s_rm = app.add_subcommand("rmt", "random-matrix one-level density integral, both evaluation routes");
  s_rm->add_option("--group", rm.group, "symmetry type")
      ->required()
      ->check(CLI::IsMember({"U", "Sp", "O", "SOeven", "SOodd"}));
  s_rm->add_option("--sigma", rm.sigma, "support half-width of the Fejer test function")->required();
  add_common(s_rm, rm.c);
  s_rm->callback([&] { rc = run_rmt(rm); });

  GridArgs gr;
  auto* s_gr = app.add_subcommand("density-grid", "batch one-level density rows over a level grid");
  s_gr->add_option("--spec", gr.spec_path,
                   "key=value spec file: k, sigma, u, N (comma list), optional R, tol, X, Y")
      ->required();
  add_common(s_gr, gr.c, "csv");
  s_gr->callback([&] { rc = run_density_grid(gr); });

  DeltastarArgs ds;
  auto* s_ds = app.add_subcommand("deltastar", "weighted newform average from an eigen-data file");
  s_ds->add_option("--k", ds.k, "weight, even and >= 4")->required();
  s_ds->add_option("--N", ds.N, "level")->required();
  s_ds->add_option("--m", ds.m, "first index, coprime to N")->required();
  s_ds->add_option("--n", ds.n, "second index, coprime to N")->required();
  s_ds->add_option("--eigen-data", ds.eigen_path, "JSON file of per-form local data")->required();
  add_common(s_ds, ds.c);
  s_ds->callback([&] { rc = run_deltastar(ds); });

  try {
    std::vector<std::string> tokens = expand_config_tokens(argc, argv);
    std::vector<const char*> args;
    args.push_back(argv[0]);
    for (const auto& t : tokens) args.push_back(t.c_str());
    app.parse(static_cast<int>(args.size()), args.data());
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n";
    std::cerr << app.help() << std::flush;
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
