#include "slicegap/config.hpp"

#include "slicegap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace slicegap {

namespace {

using Section = std::map<std::string, std::string>;
using Document = std::map<std::string, Section>;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"target", {"reference", "name", "dim"}},
      {"target.component1", {"shape", "mode", "height", "scale"}},
      {"target.component2", {"shape", "mode", "height", "scale"}},
      {"sampler", {"kind", "w", "k_inner", "inner_kind", "max_loop"}},
      {"run", {"n", "seed", "burn_in", "x0", "chains"}},
      {"oracle",
       {"kind", "cells", "eps_cut", "levels", "directions", "k_list", "k_max", "tv_steps", "tol", "tol_theorem",
        "tol_beta", "tol_monotone", "tol_tv", "tol_mt", "tol_reversibility", "tol_psd", "tol_norm_identity", "tol_level_bound"}},
      {"output", {"directory", "formats"}},
      {"verify", {"quick", "inject_gamma_sign_flip"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

[[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& msg) {
  throw ConfigError("[" + section + "] " + key + ": " + msg);
}

Document parse_document(const std::string& text) {
  Document doc;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().count(section)) throw ConfigError(where + ": unknown section [" + section + "]");
      doc[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!schema().at(section).count(key)) fail(section, key, "unknown key");
    if (doc[section].count(key)) fail(section, key, "given twice");
    doc[section][key] = value;
  }
  return doc;
}

struct Reader {
  const Document& doc;

  const std::string* get(const std::string& sec, const std::string& key) const {
    auto s = doc.find(sec);
    if (s == doc.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  double number(const std::string& sec, const std::string& key, double def) const {
    const std::string* v = get(sec, key);
    if (!v) return def;
    try {
      std::size_t used = 0;
      const double x = std::stod(*v, &used);
      if (used != v->size() || !std::isfinite(x)) throw std::invalid_argument("");
      return x;
    } catch (const std::exception&) {
      fail(sec, key, "expected a number, got '" + *v + "'");
    }
  }

  long long integer(const std::string& sec, const std::string& key, long long def) const {
    const std::string* v = get(sec, key);
    if (!v) return def;
    try {
      std::size_t used = 0;
      const long long x = std::stoll(*v, &used);
      if (used != v->size()) throw std::invalid_argument("");
      return x;
    } catch (const std::exception&) {
      fail(sec, key, "expected an integer, got '" + *v + "'");
    }
  }

  std::uint64_t u64(const std::string& sec, const std::string& key, std::uint64_t def) const {
    const std::string* v = get(sec, key);
    if (!v) return def;
    try {
      std::size_t used = 0;
      if (!v->empty() && (*v)[0] == '-') throw std::invalid_argument("");
      const unsigned long long x = std::stoull(*v, &used);
      if (used != v->size()) throw std::invalid_argument("");
      return x;
    } catch (const std::exception&) {
      fail(sec, key, "expected an unsigned integer, got '" + *v + "'");
    }
  }

  bool boolean(const std::string& sec, const std::string& key, bool def) const {
    const std::string* v = get(sec, key);
    if (!v) return def;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    fail(sec, key, "expected true or false, got '" + *v + "'");
  }

  std::vector<double> numbers(const std::string& sec, const std::string& key) const {
    const std::string* v = get(sec, key);
    std::vector<double> out;
    if (!v) return out;
    for (const auto& item : split(*v, ',')) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(item, &used));
        if (used != item.size() || !std::isfinite(out.back())) throw std::invalid_argument("");
      } catch (const std::exception&) {
        fail(sec, key, "expected a comma separated list of numbers, got '" + *v + "'");
      }
    }
    return out;
  }

  std::vector<int> integers(const std::string& sec, const std::string& key, std::vector<int> def) const {
    if (!get(sec, key)) return def;
    std::vector<int> out;
    for (double x : numbers(sec, key)) {
      if (x != std::floor(x) || std::abs(x) > 1e9) fail(sec, key, "expected integers");
      out.push_back(static_cast<int>(x));
    }
    return out;
  }
};

LevelKernelKind level_kind_for(SamplerKind k) {
  switch (k) {
    case SamplerKind::SimpleSlice: return LevelKernelKind::Uniform;
    case SamplerKind::SteppingOutShrinkage: return LevelKernelKind::SoSh;
    case SamplerKind::HitAndRunSlice: return LevelKernelKind::HitAndRun;
    case SamplerKind::HarSoSh: return LevelKernelKind::Combined;
    case SamplerKind::KStepHybrid: break;
  }
  return LevelKernelKind::SoSh;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

TargetDensity read_target(const Reader& r, bool& given) {
  const bool has_components = r.doc.count("target.component1") || r.doc.count("target.component2");
  if (const std::string* ref = r.get("target", "reference")) {
    if (has_components || r.get("target", "dim")) {
      fail("target", "reference", "cannot be combined with explicit components");
    }
    given = true;
    try {
      return reference::by_name(*ref);
    } catch (const ArgumentError&) {
      fail("target", "reference", "unknown reference target '" + *ref + "' (expected T1, T2 or U1)");
    }
  }
  if (!has_components) {
    given = false;
    return reference::twin_triangles();
  }
  given = true;
  if (!r.doc.count("target.component1")) fail("target.component1", "shape", "component1 is required");
  std::vector<QuasiConcaveComponent> comps;
  int dim = static_cast<int>(r.integer("target", "dim", 0));
  for (const std::string sec : {"target.component1", "target.component2"}) {
    if (!r.doc.count(sec)) continue;
    QuasiConcaveComponent c;
    const std::string* shape = r.get(sec, "shape");
    if (!shape) fail(sec, "shape", "missing");
    try {
      c.shape = parse_shape(*shape);
    } catch (const ArgumentError&) {
      fail(sec, "shape", "expected triangular, gaussian or uniform, got '" + *shape + "'");
    }
    const auto mode = r.numbers(sec, "mode");
    if (mode.empty()) fail(sec, "mode", "missing");
    if (dim == 0) dim = static_cast<int>(mode.size());
    if (static_cast<int>(mode.size()) != dim) fail(sec, "mode", "has " + std::to_string(mode.size()) +
                                                                    " coordinates, expected " + std::to_string(dim));
    c.mode = Eigen::Map<const Eigen::VectorXd>(mode.data(), dim);
    c.height = r.number(sec, "height", 1.0);
    c.scale = r.number(sec, "scale", 1.0);
    if (!(c.height > 0.0)) fail(sec, "height", "must be positive");
    if (!(c.scale > 0.0)) fail(sec, "scale", "must be positive");
    if (c.shape == Shape::Triangular && dim != 1) fail(sec, "shape", "triangular components need dim = 1");
    comps.push_back(c);
  }
  if (dim < 1) fail("target", "dim", "must be positive");
  const std::string* name = r.get("target", "name");
  return TargetDensity(name ? *name : "custom", dim, comps);
}

}  // namespace

bool ExperimentConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const std::string& text) {
  const Document doc = parse_document(text);
  const Reader r{doc};
  ExperimentConfig c;

  std::string canonical;
  for (const auto& [sec, kv] : doc) {
    for (const auto& [k, v] : kv) canonical += sec + "." + k + "=" + v + "\n";
  }
  c.hash = fnv1a(canonical);

  c.target = read_target(r, c.target_given);
  const int d = c.target.dim();
  const std::string& tname = c.target.name();
  const bool is_reference = tname == "T1" || tname == "T2" || tname == "U1";

  // Sampler.
  const std::string* kind = r.get("sampler", "kind");
  try {
    c.sampler.kind = kind ? parse_sampler(*kind)
                          : (d == 1 ? SamplerKind::SteppingOutShrinkage : SamplerKind::HarSoSh);
  } catch (const ArgumentError& e) {
    fail("sampler", "kind", e.what());
  }
  if (const std::string* inner = r.get("sampler", "inner_kind")) {
    try {
      c.sampler.inner_kind = parse_sampler(*inner);
    } catch (const ArgumentError& e) {
      fail("sampler", "inner_kind", e.what());
    }
  } else {
    c.sampler.inner_kind = d == 1 ? SamplerKind::SteppingOutShrinkage : SamplerKind::HarSoSh;
  }
  c.sampler.w = r.number("sampler", "w", is_reference ? reference::default_width(tname) : 1.0);
  c.sampler.k_inner = static_cast<int>(r.integer("sampler", "k_inner", 1));
  c.sampler.max_loop = static_cast<int>(r.integer("sampler", "max_loop", 10000));
  if (!(c.sampler.w > 0.0)) fail("sampler", "w", "must be positive");
  if (c.sampler.k_inner < 1) fail("sampler", "k_inner", "must be at least 1");
  if (c.sampler.max_loop < 1) fail("sampler", "max_loop", "must be at least 1");
  if (c.sampler.kind == SamplerKind::KStepHybrid && c.sampler.inner_kind == SamplerKind::KStepHybrid) {
    fail("sampler", "inner_kind", "cannot be k_step_hybrid");
  }
  try {
    validate_sampler(c.target, c.sampler);
  } catch (const Error& e) {
    fail("sampler", "w", e.what());
  }

  // Run.
  const long long n = r.integer("run", "n", 1000);
  if (n < 0) fail("run", "n", "must be non-negative");
  c.n = static_cast<std::size_t>(n);
  c.seed = r.u64("run", "seed", 1);
  const long long burn = r.integer("run", "burn_in", 0);
  if (burn < 0) fail("run", "burn_in", "must be non-negative");
  c.burn_in = static_cast<std::size_t>(burn);
  const long long chains = r.integer("run", "chains", 2000);
  if (chains < 1) fail("run", "chains", "must be positive");
  c.chains = static_cast<std::size_t>(chains);
  if (r.get("run", "x0")) {
    const auto x0 = r.numbers("run", "x0");
    if (static_cast<int>(x0.size()) != d) fail("run", "x0", "must have " + std::to_string(d) + " coordinates");
    c.x0 = Eigen::Map<const Eigen::VectorXd>(x0.data(), d);
  } else {
    const auto& comps = c.target.components();
    c.x0 = comps.size() == 2 && comps[1].height > comps[0].height ? comps[1].mode : comps[0].mode;
  }
  if (!(c.target(c.x0) > 0.0)) fail("run", "x0", "density is zero at the initial point");

  // Oracle.
  if (const std::string* ok = r.get("oracle", "kind")) {
    try {
      c.oracle_kind = parse_level_kind(*ok);
    } catch (const ArgumentError& e) {
      fail("oracle", "kind", e.what());
    }
  } else {
    const SamplerKind lk = c.sampler.kind == SamplerKind::KStepHybrid ? c.sampler.inner_kind : c.sampler.kind;
    c.oracle_kind = level_kind_for(lk);
  }
  if (d > 2) fail("oracle", "kind", "the oracle supports dimensions 1 and 2");
  if (d == 2 && c.oracle_kind == LevelKernelKind::SoSh) fail("oracle", "kind", "stepping_out_shrinkage needs d = 1");
  c.cells = r.integers("oracle", "cells", d == 1 ? std::vector<int>{2000} : std::vector<int>(d, 40));
  if (c.cells.size() == 1 && d > 1) c.cells.assign(d, c.cells[0]);
  if (static_cast<int>(c.cells.size()) != d) fail("oracle", "cells", "needs one count per dimension");
  for (int v : c.cells) {
    if (v < 1) fail("oracle", "cells", "counts must be positive");
  }
  c.eps_cut = r.number("oracle", "eps_cut", 1e-2);
  if (!(c.eps_cut > 0.0)) fail("oracle", "eps_cut", "must be positive");
  c.oracle.levels = static_cast<int>(r.integer("oracle", "levels", d == 1 ? 0 : 32));
  if (c.oracle.levels < 0 || c.oracle.levels == 1) fail("oracle", "levels", "must be 0 or at least 2");
  c.oracle.directions = static_cast<int>(r.integer("oracle", "directions", 64));
  if (c.oracle.directions < 1) fail("oracle", "directions", "must be positive");
  c.k_list = r.integers("oracle", "k_list", d == 1 ? std::vector<int>{1, 2, 5, 10, 20} : std::vector<int>{1, 2, 5});
  if (c.k_list.empty()) fail("oracle", "k_list", "must not be empty");
  for (int k : c.k_list) {
    if (k < 1) fail("oracle", "k_list", "entries must be at least 1");
  }
  c.k_max = static_cast<int>(r.integer("oracle", "k_max", d == 1 ? 10 : 5));
  if (c.k_max < 1) fail("oracle", "k_max", "must be at least 1");
  c.tv_steps = static_cast<int>(r.integer("oracle", "tv_steps", 50));
  if (c.tv_steps < 1) fail("oracle", "tv_steps", "must be at least 1");
  c.oracle.powers = c.k_list;
  for (int k = 1; k <= c.k_max; ++k) c.oracle.powers.push_back(k);

  const double all = r.number("oracle", "tol", -1.0);
  auto tol = [&](const char* key, double def) {
    const double v = r.number("oracle", key, all >= 0.0 ? all : def);
    if (v < 0.0) fail("oracle", key, "must be non-negative");
    return v;
  };
  if (r.get("oracle", "tol") && all < 0.0) fail("oracle", "tol", "must be non-negative");
  c.tol.theorem = tol("tol_theorem", d == 1 ? 5e-3 : 1e-2);
  c.tol.beta = tol("tol_beta", 2e-3);
  c.tol.monotone = tol("tol_monotone", 1e-6);
  c.tol.tv = tol("tol_tv", 1e-8);
  c.tol.mira_tierney = tol("tol_mt", 1e-3);
  c.tol.reversibility = tol("tol_reversibility", 1e-8);
  c.tol.psd = tol("tol_psd", 1e-10);
  c.tol.norm_identity = tol("tol_norm_identity", 1e-6);
  c.tol.level_bound = tol("tol_level_bound", 5e-3);

  // Output.
  if (const std::string* dir = r.get("output", "directory")) c.out_dir = *dir;
  if (r.get("output", "formats")) {
    c.formats = split(*r.get("output", "formats"), ',');
    for (const auto& f : c.formats) {
      if (f != "csv" && f != "txt") fail("output", "formats", "expected csv and/or txt, got '" + f + "'");
    }
  }

  c.verify_quick = r.boolean("verify", "quick", false);
  c.inject_gamma_sign_flip = r.boolean("verify", "inject_gamma_sign_flip", false);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace slicegap
