#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace pgc {

/// Minimal deterministic JSON assembler. Keys keep insertion order and
/// numbers print with %.17g (non-finite values become null), so identical
/// inputs serialize byte-identically.
class JsonWriter {
 public:
  static std::string number(double x) {
    if (!std::isfinite(x)) return "null";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }

  static std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out += c;
      }
    }
    out += '"';
    return out;
  }

  JsonWriter& field(const std::string& key, double value) {
    return raw(key, number(value));
  }
  JsonWriter& field(const std::string& key, int value) {
    return raw(key, std::to_string(value));
  }
  JsonWriter& field(const std::string& key, long value) {
    return raw(key, std::to_string(value));
  }
  JsonWriter& field(const std::string& key, bool value) {
    return raw(key, value ? "true" : "false");
  }
  JsonWriter& field(const std::string& key, const std::string& value) {
    return raw(key, quote(value));
  }
  JsonWriter& field(const std::string& key, const char* value) {
    return raw(key, quote(value));
  }
  JsonWriter& field(const std::string& key, const std::vector<double>& v) {
    std::string arr = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) arr += ", ";
      arr += number(v[i]);
    }
    arr += "]";
    return raw(key, arr);
  }
  JsonWriter& field(const std::string& key, const std::vector<int>& v) {
    std::string arr = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) arr += ", ";
      arr += std::to_string(v[i]);
    }
    arr += "]";
    return raw(key, arr);
  }
  /// Embeds a pre-serialized JSON value.
  JsonWriter& raw(const std::string& key, const std::string& json) {
    if (!body_.empty()) body_ += ", ";
    body_ += quote(key) + ": " + json;
    return *this;
  }

  std::string str() const { return "{" + body_ + "}"; }

  static std::string array(const std::vector<std::string>& items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += ", ";
      out += items[i];
    }
    out += "]";
    return out;
  }

 private:
  std::string body_;
};

}  // namespace pgc
