#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rpde/solver.hpp"

// Flat "section.key = value" config files with include support, a small
// arithmetic expression language for coefficient/initial/forcing fields and
// deterministic paths, and the scenario builder used by the CLI.

namespace rpde {

// Parsed expression in variables x, y, t. Supported: + - * / ^, parentheses,
// numbers, pi, sin cos tan exp log sqrt abs tanh min max.
class Expr {
 public:
  static Expr parse(const std::string& text);
  double eval(double x, double y = 0.0, double t = 0.0) const;
  const std::string& text() const { return text_; }

 private:
  std::function<double(double, double, double)> fn_;
  std::string text_;
};

class Config {
 public:
  static Config load(const std::string& file);
  static Config from_text(const std::string& text,
                          const std::string& origin = "<inline>");

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  std::string get(const std::string& key) const;
  std::string get(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double dflt) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;
  std::vector<int> get_int_list(const std::string& key,
                                const std::vector<int>& dflt) const;

  const std::string& text() const { return text_; }
  const std::map<std::string, std::string>& entries() const { return kv_; }
  void set(const std::string& key, const std::string& value);

 private:
  std::map<std::string, std::string> kv_;
  std::map<std::string, int> lines_;  // for error messages
  std::string text_;                  // canonical merged text
};

// Scenario assembled from a config; dirichlet scenarios are returned already
// extended to the periodic box (the original problem is kept in `embedding`).
Scenario build_scenario(const Config& cfg);

// 64-bit FNV-1a of the canonical config text.
std::uint64_t config_digest(const Config& cfg);

}  // namespace rpde
