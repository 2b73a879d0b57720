#include "rpde/config.hpp"

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

namespace rpde {

namespace {

// ---- tiny recursive-descent expression parser ----

struct Node {
  virtual ~Node() = default;
  virtual double eval(double x, double y, double t) const = 0;
};
using NodePtr = std::shared_ptr<const Node>;

struct Num : Node {
  double v;
  explicit Num(double v) : v(v) {}
  double eval(double, double, double) const override { return v; }
};
struct Var : Node {
  int which;  // 0=x 1=y 2=t
  explicit Var(int w) : which(w) {}
  double eval(double x, double y, double t) const override {
    return which == 0 ? x : (which == 1 ? y : t);
  }
};
struct Bin : Node {
  char op;
  NodePtr a, b;
  Bin(char op, NodePtr a, NodePtr b)
      : op(op), a(std::move(a)), b(std::move(b)) {}
  double eval(double x, double y, double t) const override {
    const double u = a->eval(x, y, t), v = b->eval(x, y, t);
    switch (op) {
      case '+': return u + v;
      case '-': return u - v;
      case '*': return u * v;
      case '/': return u / v;
      default: return std::pow(u, v);
    }
  }
};
struct Neg : Node {
  NodePtr a;
  explicit Neg(NodePtr a) : a(std::move(a)) {}
  double eval(double x, double y, double t) const override {
    return -a->eval(x, y, t);
  }
};
struct Fun1 : Node {
  double (*f)(double);
  NodePtr a;
  Fun1(double (*f)(double), NodePtr a) : f(f), a(std::move(a)) {}
  double eval(double x, double y, double t) const override {
    return f(a->eval(x, y, t));
  }
};
struct Fun2 : Node {
  double (*f)(double, double);
  NodePtr a, b;
  Fun2(double (*f)(double, double), NodePtr a, NodePtr b)
      : f(f), a(std::move(a)), b(std::move(b)) {}
  double eval(double x, double y, double t) const override {
    return f(a->eval(x, y, t), b->eval(x, y, t));
  }
};

struct Parser {
  const std::string& s;
  std::size_t pos = 0;

  explicit Parser(const std::string& s) : s(s) {}

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("expression parse error at position " +
                          std::to_string(pos) + " in '" + s + "': " + what);
  }

  NodePtr parse_expr() {
    NodePtr n = parse_term();
    for (;;) {
      if (eat('+'))
        n = std::make_shared<Bin>('+', n, parse_term());
      else if (eat('-'))
        n = std::make_shared<Bin>('-', n, parse_term());
      else
        return n;
    }
  }
  NodePtr parse_term() {
    NodePtr n = parse_factor();
    for (;;) {
      if (eat('*'))
        n = std::make_shared<Bin>('*', n, parse_factor());
      else if (eat('/'))
        n = std::make_shared<Bin>('/', n, parse_factor());
      else
        return n;
    }
  }
  NodePtr parse_factor() {
    skip();
    if (eat('-')) return std::make_shared<Neg>(parse_factor());
    NodePtr base = parse_atom();
    if (eat('^')) return std::make_shared<Bin>('^', base, parse_factor());
    return base;
  }
  NodePtr parse_atom() {
    skip();
    if (pos >= s.size()) fail("unexpected end");
    if (eat('(')) {
      NodePtr n = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    const char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      const double v = std::stod(s.substr(pos), &used);
      pos += used;
      return std::make_shared<Num>(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos;
      while (end < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[end])) ||
              s[end] == '_'))
        ++end;
      const std::string name = s.substr(pos, end - pos);
      pos = end;
      if (name == "x") return std::make_shared<Var>(0);
      if (name == "y") return std::make_shared<Var>(1);
      if (name == "t") return std::make_shared<Var>(2);
      if (name == "pi") return std::make_shared<Num>(3.14159265358979323846);
      static const std::map<std::string, double (*)(double)> fns1 = {
          {"sin", std::sin},   {"cos", std::cos},   {"tan", std::tan},
          {"exp", std::exp},   {"log", std::log},   {"sqrt", std::sqrt},
          {"abs", std::fabs},  {"tanh", std::tanh}};
      static const std::map<std::string, double (*)(double, double)> fns2 = {
          {"min", [](double a, double b) { return a < b ? a : b; }},
          {"max", [](double a, double b) { return a > b ? a : b; }},
          {"pow", [](double a, double b) { return std::pow(a, b); }}};
      if (auto it = fns1.find(name); it != fns1.end()) {
        if (!eat('(')) fail("expected '(' after " + name);
        NodePtr a = parse_expr();
        if (!eat(')')) fail("expected ')'");
        return std::make_shared<Fun1>(it->second, a);
      }
      if (auto it = fns2.find(name); it != fns2.end()) {
        if (!eat('(')) fail("expected '(' after " + name);
        NodePtr a = parse_expr();
        if (!eat(',')) fail("expected ','");
        NodePtr b = parse_expr();
        if (!eat(')')) fail("expected ')'");
        return std::make_shared<Fun2>(it->second, a, b);
      }
      fail("unknown identifier '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

}  // namespace

Expr Expr::parse(const std::string& text) {
  Parser p(text);
  NodePtr root = p.parse_expr();
  p.skip();
  if (p.pos != text.size()) p.fail("trailing input");
  Expr e;
  e.text_ = text;
  e.fn_ = [root](double x, double y, double t) { return root->eval(x, y, t); };
  return e;
}

double Expr::eval(double x, double y, double t) const { return fn_(x, y, t); }

namespace {

void parse_into(const std::string& text, const std::string& origin,
                std::map<std::string, std::string>& kv,
                std::map<std::string, int>& lines, std::string& canonical,
                int depth) {
  if (depth > 8) throw ValidationError("config: include depth exceeded");
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string stripped = line;
    if (auto h = stripped.find('#'); h != std::string::npos)
      stripped = stripped.substr(0, h);
    // trim
    auto notspace = [](unsigned char c) { return !std::isspace(c); };
    stripped.erase(stripped.begin(),
                   std::find_if(stripped.begin(), stripped.end(), notspace));
    stripped.erase(
        std::find_if(stripped.rbegin(), stripped.rend(), notspace).base(),
        stripped.end());
    if (stripped.empty()) continue;
    if (stripped.rfind("include ", 0) == 0) {
      std::filesystem::path inc = stripped.substr(8);
      if (inc.is_relative() && origin != "<inline>")
        inc = std::filesystem::path(origin).parent_path() / inc;
      std::ifstream f(inc);
      if (!f)
        throw ValidationError(origin + ":" + std::to_string(lineno) +
                              ": cannot open include '" + inc.string() + "'");
      std::stringstream buf;
      buf << f.rdbuf();
      parse_into(buf.str(), inc.string(), kv, lines, canonical, depth + 1);
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ValidationError(origin + ":" + std::to_string(lineno) +
                            ": expected 'key = value'");
    std::string key = stripped.substr(0, eq);
    std::string val = stripped.substr(eq + 1);
    key.erase(std::find_if(key.rbegin(), key.rend(), notspace).base(),
              key.end());
    val.erase(val.begin(), std::find_if(val.begin(), val.end(), notspace));
    if (key.empty())
      throw ValidationError(origin + ":" + std::to_string(lineno) +
                            ": empty key");
    kv[key] = val;
    lines[key] = lineno;
    canonical += key + " = " + val + "\n";
  }
}

}  // namespace

Config Config::load(const std::string& file) {
  std::ifstream f(file);
  if (!f) throw ValidationError("config: cannot open '" + file + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return from_text(buf.str(), file);
}

Config Config::from_text(const std::string& text, const std::string& origin) {
  Config cfg;
  parse_into(text, origin, cfg.kv_, cfg.lines_, cfg.text_, 0);
  return cfg;
}

std::string Config::get(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end())
    throw ValidationError("config: missing required key '" + key + "'");
  return it->second;
}
std::string Config::get(const std::string& key,
                        const std::string& dflt) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? dflt : it->second;
}
double Config::get_double(const std::string& key) const {
  try {
    return Expr::parse(get(key)).eval(0, 0, 0);
  } catch (const ValidationError&) {
    throw ValidationError("config: key '" + key + "' is not a number");
  }
}
double Config::get_double(const std::string& key, double dflt) const {
  return has(key) ? get_double(key) : dflt;
}
int Config::get_int(const std::string& key) const {
  const double v = get_double(key);
  const int iv = static_cast<int>(std::llround(v));
  if (std::abs(v - iv) > 1e-9)
    throw ValidationError("config: key '" + key + "' is not an integer");
  return iv;
}
int Config::get_int(const std::string& key, int dflt) const {
  return has(key) ? get_int(key) : dflt;
}
bool Config::get_bool(const std::string& key, bool dflt) const {
  if (!has(key)) return dflt;
  const std::string v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError("config: key '" + key + "' is not a boolean");
}
std::vector<int> Config::get_int_list(const std::string& key,
                                      const std::vector<int>& dflt) const {
  if (!has(key)) return dflt;
  std::vector<int> out;
  std::stringstream ss(get(key));
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stoi(cell));
  return out;
}
void Config::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
  text_ += key + " = " + value + "\n";
}

std::uint64_t config_digest(const Config& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : cfg.text()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Scenario build_scenario(const Config& cfg) {
  Scenario sc;

  const double horizon = cfg.get_double("time.horizon", 1.0);
  const int steps = cfg.get_int("time.steps", 128);
  sc.time = TimeGrid::uniform(horizon, steps);

  const int dim = cfg.get_int("space.dim", 1);
  const int extent = cfg.get_int("space.extent", 64);
  const int extent1 = cfg.get_int("space.extent_y", extent);
  const double length = cfg.get_double("space.length", 1.0);
  const double length1 = cfg.get_double("space.length_y", length);
  const double origin = cfg.get_double("space.origin", 0.0);
  const double origin1 = cfg.get_double("space.origin_y", origin);
  const std::string bnd = cfg.get("space.boundary", "periodic");
  Boundary boundary;
  if (bnd == "periodic")
    boundary = Boundary::periodic;
  else if (bnd == "dirichlet")
    boundary = Boundary::dirichlet;
  else
    throw ValidationError("config: space.boundary must be periodic|dirichlet");
  sc.space = SpatialGrid(dim, {extent, extent1}, {length, length1}, boundary,
                         {origin, origin1});

  auto sample_expr = [&](const std::string& key, const std::string& dflt) {
    Expr e = Expr::parse(cfg.get(key, dflt));
    return ScalarField::sample(
        sc.space, [&](double x, double y) { return e.eval(x, y, 0.0); });
  };

  sc.lambda = cfg.get_double("elliptic.lambda", 1.0);
  {
    std::vector<ScalarField> a;
    a.push_back(sample_expr("elliptic.a11", "1"));
    if (dim == 2) {
      a.push_back(sample_expr("elliptic.a12", "0"));
      a.push_back(sample_expr("elliptic.a22", "1"));
    }
    sc.a.push_back(std::move(a));
  }

  sc.u0 = sample_expr("initial.expr", "0");
  if (boundary == Boundary::dirichlet) sc.u0.zero_boundary();

  if (cfg.has("forcing.expr")) sc.f.push_back(sample_expr("forcing.expr", "0"));

  // driver
  DriverSpec& ds = sc.driver_spec;
  const std::string kind = cfg.get("driver.kind", "none");
  const int channels = cfg.get_int("driver.channels", 1);
  ds.path.channels = channels;
  ds.path.seed = static_cast<std::uint64_t>(cfg.get_int("run.seed", 1));
  ds.alpha = cfg.get_double("driver.alpha", 0.45);
  ds.refine_level = cfg.get_int("driver.refine_level", 0);
  ds.quad_refine = cfg.get_int("driver.quad_refine", 16);
  const std::string lift = cfg.get("driver.lift", "pl");
  if (lift == "pl")
    ds.lift = LiftKind::pl_rough_path;
  else if (lift == "canonical")
    ds.lift = LiftKind::canonical;
  else if (lift == "ito")
    ds.lift = LiftKind::ito_bm;
  else
    throw ValidationError("config: driver.lift must be pl|canonical|ito");
  if (kind == "bm" || kind == "none")
    ds.path.kind = PathKind::bm;
  else if (kind == "fbm") {
    ds.path.kind = PathKind::fbm;
    ds.path.hurst = cfg.get_double("driver.hurst", 0.5);
  } else if (kind == "expr") {
    ds.path.kind = PathKind::deterministic;
    for (int c = 0; c < channels; ++c) {
      Expr e = Expr::parse(cfg.get("driver.expr_" + std::to_string(c), "t"));
      ds.path.expressions.push_back(
          [e](double t) { return e.eval(0.0, 0.0, t); });
    }
  } else {
    throw ValidationError("config: driver.kind must be none|bm|fbm|expr");
  }
  if (kind == "none") {
    // zero driver: one channel with vanishing coefficients
    ds.path.kind = PathKind::deterministic;
    ds.path.channels = 1;
    ds.path.expressions = {[](double) { return 0.0; }};
    FirstOrderOp ch = FirstOrderOp::zero(sc.space);
    ds.channels.push_back(std::move(ch));
  } else {
    for (int mu = 0; mu < channels; ++mu) {
      FirstOrderOp ch;
      for (int a = 0; a < dim; ++a)
        ch.sigma.push_back(sample_expr("driver.sigma_" + std::to_string(mu) +
                                           "_" + std::to_string(a),
                                       "0"));
      ch.c = sample_expr("driver.rho_" + std::to_string(mu), "0");
      ds.channels.push_back(std::move(ch));
    }
  }

  sc.scheme.theta = cfg.get_double("scheme.theta", 1.0);
  sc.scheme.allow_nongeometric = cfg.get_bool("scheme.allow_nongeometric", false);
  sc.scheme.cfl_limit = cfg.get_double("scheme.cfl", 0.5);
  sc.scheme.mp_tol_factor = cfg.get_double("scheme.mp_factor", 10.0);
  sc.r = cfg.get_double("exponents.r", 2.0);
  sc.q = cfg.get_double("exponents.q", 2.0);
  sc.p = cfg.get_double("exponents.p", 2.0);

  if (boundary == Boundary::dirichlet)
    return dirichlet_extend(sc, cfg.get_int("dirichlet.margin", 0));
  return sc;
}

}  // namespace rpde
