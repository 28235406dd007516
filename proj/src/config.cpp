#include "mel/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace mel {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got '" + v + "'");
  }
}

std::int64_t to_int(const std::string& v, const std::string& where) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return i;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected an integer, got '" + v + "'");
  }
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  if (!v.empty() && v.back() == sep) out.push_back("");
  return out;
}

std::vector<int> parse_int_list(const std::string& v, const std::string& where) {
  std::vector<int> out;
  for (const std::string& tok : split(v, ','))
    out.push_back(int(to_int(tok, where)));
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& v, const std::string& where) {
  std::vector<double> out;
  for (const std::string& tok : split(v, ',')) out.push_back(to_double(tok, where));
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

Mat3 parse_mat3(const std::string& v, const std::string& where) {
  const std::vector<double> vals = parse_double_list(v, where);
  if (vals.size() != 9) throw ConfigError(where + ": expected 9 comma-separated reals");
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = vals[std::size_t(3 * i + j)];
  return m;
}

Vec3 parse_vec3(const std::string& v, const std::string& where) {
  const std::vector<double> vals = parse_double_list(v, where);
  if (vals.size() != 3) throw ConfigError(where + ": expected 3 comma-separated reals");
  return Vec3(vals[0], vals[1], vals[2]);
}

// Structured layout entries, e.g.
//   laminate(axis=1, fraction=0.5, values=[1.0, 10.0])
//   checkerboard(values=[1.0, 4.0])
//   constant(1.0)
std::map<std::string, std::string> parse_kwargs(const std::string& inner,
                                                const std::string& where) {
  std::map<std::string, std::string> kw;
  int depth = 0;
  std::string cur;
  std::vector<std::string> parts;
  for (char ch : inner) {
    if (ch == '[' || ch == '(') ++depth;
    if (ch == ']' || ch == ')') --depth;
    if (ch == ',' && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!trim(cur).empty()) parts.push_back(cur);
  for (const std::string& part : parts) {
    const std::size_t eq = part.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected key=value inside layout, got '" + trim(part) + "'");
    kw[trim(part.substr(0, eq))] = trim(part.substr(eq + 1));
  }
  return kw;
}

}  // namespace

PhaseLayout parse_layout(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  const std::size_t open = t.find('(');
  if (open == std::string::npos || t.back() != ')')
    throw ConfigError(where + ": malformed layout '" + t + "'");
  const std::string kind = trim(t.substr(0, open));
  const std::string inner = t.substr(open + 1, t.size() - open - 2);

  if (kind == "constant") return PhaseLayout::constant(to_double(trim(inner), where));

  auto kw = parse_kwargs(inner, where);
  auto values = [&]() -> std::vector<double> {
    auto it = kw.find("values");
    if (it == kw.end()) throw ConfigError(where + ": layout needs values=[...]");
    std::string v = trim(it->second);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
      throw ConfigError(where + ": values must be a [list]");
    return parse_double_list(v.substr(1, v.size() - 2), where);
  };

  if (kind == "laminate") {
    if (!kw.count("axis")) throw ConfigError(where + ": laminate needs axis=1..3");
    const int axis = int(to_int(kw["axis"], where));
    if (axis < 1 || axis > 3) throw ConfigError(where + ": laminate axis must be 1..3");
    const double fraction = kw.count("fraction") ? to_double(kw["fraction"], where) : 0.5;
    const std::vector<double> vals = values();
    if (vals.size() != 2) throw ConfigError(where + ": laminate needs two values");
    if (!(fraction > 0.0 && fraction < 1.0))
      throw ConfigError(where + ": laminate fraction must lie in (0,1)");
    return PhaseLayout::laminate(axis - 1, fraction, vals[0], vals[1]);
  }
  if (kind == "checkerboard") {
    const std::vector<double> vals = values();
    if (vals.size() != 2) throw ConfigError(where + ": checkerboard needs two values");
    return PhaseLayout::checkerboard(vals[0], vals[1]);
  }
  throw ConfigError(where + ": unknown layout kind '" + kind + "'");
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value,
                        const std::string& where) {
  if (key == "density.name") {
    if (value != "D1" && value != "D2")
      throw ConfigError(where + ": density must be D1 or D2");
    cfg.density = value;
  } else if (key == "density.c") {
    cfg.c_layout = parse_layout(value, where);
  } else if (key == "density.kappa") {
    cfg.kappa_layout = parse_layout(value, where);
  } else if (key == "density.a") {
    cfg.a_layout = parse_layout(value, where);
  } else if (key == "density.p") {
    cfg.p = to_double(value, where);
  } else if (key == "density.s") {
    cfg.s = to_double(value, where);
  } else if (key == "density.mu0") {
    cfg.mu0 = to_double(value, where);
  } else if (key == "grid.n") {
    cfg.n = int(to_int(value, where));
  } else if (key == "grid.n_cell_ref") {
    cfg.n_cell_ref = int(to_int(value, where));
  } else if (key == "grid.pad") {
    cfg.pad = to_double(value, where);
  } else if (key == "sweep.scenario") {
    cfg.scenario = value;
  } else if (key == "sweep.eps_ladder") {
    cfg.eps_ladder = parse_int_list(value, where);
  } else if (key == "sweep.delta_ladder") {
    cfg.delta_ladder = parse_double_list(value, where);
  } else if (key == "sweep.alpha") {
    cfg.alpha = to_double(value, where);
  } else if (key == "sweep.eps") {
    cfg.eps = to_double(value, where);
  } else if (key == "sweep.delta") {
    cfg.delta = to_double(value, where);
  } else if (key == "sweep.tol") {
    cfg.tol = to_double(value, where);
  } else if (key == "cell.problem") {
    if (value != "exchange" && value != "elastic")
      throw ConfigError(where + ": problem must be exchange or elastic");
    cfg.problem = value;
  } else if (key == "cell.A") {
    cfg.A = parse_mat3(value, where);
  } else if (key == "cell.nu") {
    cfg.nu = parse_vec3(value, where);
  } else if (key == "energy.functional") {
    cfg.functional = value;
  } else if (key == "stray.m_file") {
    cfg.m_file = value;
  } else if (key == "stray.mask_file") {
    cfg.mask_file = value;
  } else if (key == "run.out") {
    cfg.out_dir = value;
  } else if (key == "run.threads") {
    cfg.threads = int(to_int(value, where));
  } else if (key == "run.seed") {
    cfg.seed = std::uint64_t(to_int(value, where));
  } else if (key == "run.samples") {
    cfg.samples = to_int(value, where);
  } else if (key == "run.timing") {
    if (value == "true" || value == "1")
      cfg.timing = true;
    else if (value == "false" || value == "0")
      cfg.timing = false;
    else
      throw ConfigError(where + ": timing must be true or false");
  } else {
    throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config file not found: " + path);

  std::string section;
  std::map<std::string, int> seen;  // key -> first line
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = path + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"density", "grid", "sweep", "cell",
                                    "energy",  "stray", "run"};
      if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
            return section == k;
          }) == std::end(known))
        throw ConfigError(where + ": unknown section '" + section + "'");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside any [section]");
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    auto it = seen.find(key);
    if (it != seen.end())
      throw ConfigError(where + ": duplicate key '" + key + "' (first at " + path + ":" +
                        std::to_string(it->second) + ")");
    seen.emplace(key, lineno);
    apply_config_entry(cfg, key, value, where);
  }
}

namespace {
template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}
}  // namespace

std::string RunConfig::canonical_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "subcommand=" << subcommand << "\n";
  os << "density.name=" << density << "\n";
  os << "density.c=" << c_layout.describe() << "\n";
  os << "density.kappa=" << kappa_layout.describe() << "\n";
  os << "density.a=" << a_layout.describe() << "\n";
  os << "density.p=" << p << "\ndensity.s=" << s << "\ndensity.mu0=" << mu0 << "\n";
  os << "grid.n=" << n << "\ngrid.n_cell_ref=" << n_cell_ref << "\ngrid.pad=" << pad << "\n";
  os << "sweep.scenario=" << scenario << "\n";
  os << "sweep.eps_ladder=" << join(eps_ladder) << "\n";
  os << "sweep.delta_ladder=" << join(delta_ladder) << "\n";
  os << "sweep.alpha=" << alpha << "\nsweep.eps=" << eps << "\nsweep.delta=" << delta
     << "\nsweep.tol=" << tol << "\n";
  os << "cell.problem=" << problem << "\n";
  os << "cell.A=";
  for (int i = 0; i < 9; ++i) os << (i ? "," : "") << A(i / 3, i % 3);
  os << "\ncell.nu=" << nu[0] << "," << nu[1] << "," << nu[2] << "\n";
  os << "energy.functional=" << functional << "\n";
  os << "stray.m_file=" << m_file << "\nstray.mask_file=" << mask_file << "\n";
  os << "run.seed=" << seed << "\nrun.samples=" << samples << "\n";
  return os.str();
}

std::uint64_t RunConfig::hash() const {
  // FNV-1a.
  std::uint64_t h = 14695981039346656037ull;
  for (char c : canonical_text()) {
    h ^= std::uint64_t(std::uint8_t(c));
    h *= 1099511628211ull;
  }
  return h;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  static const char* subs[] = {"cell-solve",   "stray-field", "energy-eval",
                               "gamma-sweep",  "commute-check", "two-scale",
                               "validate-density"};
  if (std::find_if(std::begin(subs), std::end(subs), [&](const char* s) {
        return subcommand == s;
      }) == std::end(subs))
    fail("unknown subcommand '" + subcommand + "'");

  if (n < 8 || n % 8 != 0) fail("n must be a positive multiple of 8");
  if (n_cell_ref < 4) fail("n_cell_ref must be >= 4");
  if (!(pad >= 2.0)) fail("pad must be >= 2");
  if (!(alpha > 0.0)) fail("alpha must be > 0");
  if (!(tol > 0.0)) fail("tol must be > 0");
  if (!(p > 3.0)) fail("p must exceed 3");
  if (!(s > p / (p - 2.0))) fail("s must exceed p/(p-2)");
  if (!(mu0 > 0.0)) fail("mu0 must be > 0");
  if (samples < 100) fail("samples must be >= 100");
  if (threads < 0) fail("threads must be >= 0");
  if (scenario != "S1" && scenario != "S2" && scenario != "S3" && scenario != "S4")
    fail("scenario must be one of S1..S4");

  if (subcommand == "gamma-sweep" || subcommand == "commute-check" ||
      subcommand == "two-scale") {
    if (eps_ladder.size() < 2) fail("eps_ladder needs at least two denominators");
    int prev = 0;
    for (int k : eps_ladder) {
      if (k <= prev) fail("eps_ladder denominators must be strictly increasing");
      prev = k;
      if (k < 1) fail("eps_ladder denominators must be positive");
      if (n % k != 0)
        fail("eps denominator " + std::to_string(k) + " does not divide n = " +
             std::to_string(n) + " (commensurability)");
      if (n / k < 2) fail("eps denominator " + std::to_string(k) + " leaves fewer than 2 cell samples");
    }
  }
  if (subcommand == "commute-check")
    for (std::size_t i = 1; i < delta_ladder.size(); ++i)
      if (!(delta_ladder[i] < delta_ladder[i - 1]))
        fail("delta_ladder must be strictly decreasing");
  for (double d : delta_ladder)
    if (!(d > 0.0)) fail("delta_ladder entries must be positive");

  if (subcommand == "energy-eval") {
    static const char* fns[] = {"G", "Feps", "Fdelta", "Glin", "Fhom"};
    if (std::find_if(std::begin(fns), std::end(fns), [&](const char* f) {
          return functional == f;
        }) == std::end(fns))
      fail("functional must be one of G|Feps|Fdelta|Glin|Fhom");
    if (!(eps > 0.0 && eps <= 1.0)) fail("eps must lie in (0,1]");
    const double k = 1.0 / eps;
    if (std::abs(k - std::lround(k)) > 1e-9 || n % std::lround(k) != 0)
      fail("eps must be the reciprocal of an integer dividing n");
    if (functional == "Fdelta" && !(delta > 0.0)) fail("Fdelta requires delta > 0");
  }
  if (subcommand == "stray-field" && m_file.empty()) fail("stray-field requires stray.m_file");
}

}  // namespace mel
