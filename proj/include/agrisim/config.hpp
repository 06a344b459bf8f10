#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace agrisim {

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Flat "key = value" text config. '#' starts a comment, blank lines ignored.
// Insertion order is preserved so that save/parse round-trips are stable.
class KVConfig {
 public:
  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) {
    if (!has(key)) order_.push_back(key);
    kv_[key] = value;
  }
  void set(const std::string& key, double v) { set(key, fmt_double(v)); }
  void set(const std::string& key, int v) { set(key, std::to_string(v)); }
  void set(const std::string& key, long long v) { set(key, std::to_string(v)); }
  void set(const std::string& key, unsigned long long v) { set(key, std::to_string(v)); }
  void set(const std::string& key, bool v) { set(key, std::string(v ? "true" : "false")); }

  std::string get_string(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw std::invalid_argument("config: missing key '" + key + "'");
    return it->second;
  }
  std::string get_string(const std::string& key, const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
  }

  double get_double(const std::string& key, double dflt) const {
    if (!has(key)) return dflt;
    return parse_double(key, get_string(key));
  }
  long long get_int(const std::string& key, long long dflt) const {
    if (!has(key)) return dflt;
    const std::string& s = get_string(key);
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("config: bad integer for '" + key + "': " + s);
    }
    if (pos != s.size()) throw std::invalid_argument("config: bad integer for '" + key + "': " + s);
    return v;
  }
  bool get_bool(const std::string& key, bool dflt) const {
    if (!has(key)) return dflt;
    const std::string s = get_string(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::invalid_argument("config: bad bool for '" + key + "': " + s);
  }

  /// Comma-separated list value.
  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(get_string(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
  }

  const std::vector<std::string>& keys() const { return order_; }

  std::string str() const {
    std::string out;
    for (const auto& k : order_) {
      out += k;
      out += " = ";
      out += kv_.at(k);
      out += "\n";
    }
    return out;
  }

  static KVConfig parse(const std::string& text) {
    KVConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("config: line " + std::to_string(lineno) + " has no '='");
      const std::string key = trim(t.substr(0, eq));
      const std::string val = trim(t.substr(eq + 1));
      if (key.empty())
        throw std::invalid_argument("config: line " + std::to_string(lineno) + " has empty key");
      cfg.set(key, val);
    }
    return cfg;
  }

  static KVConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);  // binary: keep LF endings
    if (!out) throw std::runtime_error("config: cannot write " + path);
    out << str();
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }
  static double parse_double(const std::string& key, const std::string& s) {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("config: bad number for '" + key + "': " + s);
    }
    if (pos != s.size()) throw std::invalid_argument("config: bad number for '" + key + "': " + s);
    return v;
  }

  std::map<std::string, std::string> kv_;
  std::vector<std::string> order_;
};

}  // namespace agrisim
