#pragma once

#include <map>
#include <string>
#include <vector>

namespace pgc {
namespace toml {

/// Value subset: strings, numbers, booleans, and (nested) arrays. Enough
/// for flat configuration tables; no dates, no inline tables.
struct Value {
  enum class Kind { String, Number, Bool, Array };
  Kind kind = Kind::String;
  std::string text;
  double number = 0.0;
  bool boolean = false;
  std::vector<Value> items;
  int line = 0;

  bool is_string() const { return kind == Kind::String; }
  bool is_number() const { return kind == Kind::Number; }
  bool is_bool() const { return kind == Kind::Bool; }
  bool is_array() const { return kind == Kind::Array; }
};

/// Parsed document: root keys live in the "" section. Section and key
/// names must be bare (letters, digits, '-', '_', '.'); duplicate keys and
/// re-opened sections are errors.
struct Document {
  std::map<std::string, std::map<std::string, Value>> sections;
  std::map<std::string, int> section_lines;

  bool has(const std::string& section, const std::string& key) const;
  const Value* find(const std::string& section, const std::string& key) const;
};

/// Parses config text; config-parse errors carry 1-based line numbers.
Document parse(const std::string& text);

Document parse_file(const std::string& path);

}  // namespace toml
}  // namespace pgc
