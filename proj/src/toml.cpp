#include "pgc/toml.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pgc/errors.hpp"

namespace pgc {
namespace toml {
namespace {

[[noreturn]] void parse_fail(int line, const std::string& what) {
  std::ostringstream msg;
  msg << "line " << line << ": " << what;
  fail(ErrorCode::ConfigParse, msg.str());
}

bool bare_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
         c == '.';
}

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char take() {
    char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }
  void skip_inline_ws() {
    while (!done() && (peek() == ' ' || peek() == '\t' || peek() == '\r'))
      ++pos;
  }
  /// Whitespace, newlines, and comments; used inside arrays.
  void skip_filler() {
    while (!done()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        take();
      } else if (c == '#') {
        while (!done() && peek() != '\n') ++pos;
      } else {
        break;
      }
    }
  }
};

std::string parse_basic_string(Cursor& cur) {
  const int start_line = cur.line;
  cur.take();  // opening quote
  std::string out;
  while (true) {
    if (cur.done()) parse_fail(start_line, "unterminated string");
    char c = cur.take();
    if (c == '"') return out;
    if (c == '\n') parse_fail(start_line, "newline inside string");
    if (c == '\\') {
      if (cur.done()) parse_fail(start_line, "unterminated escape");
      char e = cur.take();
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default:
          parse_fail(start_line, std::string("unsupported escape \\") + e);
      }
    } else {
      out += c;
    }
  }
}

Value parse_value(Cursor& cur);

Value parse_array(Cursor& cur) {
  Value v;
  v.kind = Value::Kind::Array;
  v.line = cur.line;
  cur.take();  // '['
  cur.skip_filler();
  while (true) {
    if (cur.done()) parse_fail(v.line, "unterminated array");
    if (cur.peek() == ']') {
      cur.take();
      return v;
    }
    v.items.push_back(parse_value(cur));
    cur.skip_filler();
    if (cur.done()) parse_fail(v.line, "unterminated array");
    if (cur.peek() == ',') {
      cur.take();
      cur.skip_filler();
    } else if (cur.peek() != ']') {
      parse_fail(cur.line, "expected ',' or ']' in array");
    }
  }
}

Value parse_value(Cursor& cur) {
  cur.skip_inline_ws();
  if (cur.done()) parse_fail(cur.line, "missing value");
  Value v;
  v.line = cur.line;
  const char c = cur.peek();
  if (c == '"') {
    v.kind = Value::Kind::String;
    v.text = parse_basic_string(cur);
    return v;
  }
  if (c == '[') return parse_array(cur);

  std::string token;
  while (!cur.done()) {
    char t = cur.peek();
    if (t == '\n' || t == '#' || t == ',' || t == ']' || t == ' ' ||
        t == '\t' || t == '\r')
      break;
    token += cur.take();
  }
  if (token == "true" || token == "false") {
    v.kind = Value::Kind::Bool;
    v.boolean = token == "true";
    return v;
  }
  if (token.empty()) parse_fail(v.line, "missing value");
  const char* begin = token.c_str();
  char* end = nullptr;
  v.number = std::strtod(begin, &end);
  if (end != begin + token.size())
    parse_fail(v.line, "cannot parse value '" + token + "'");
  v.kind = Value::Kind::Number;
  v.text = token;
  return v;
}

}  // namespace

bool Document::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const Value* Document::find(const std::string& section,
                            const std::string& key) const {
  auto sec = sections.find(section);
  if (sec == sections.end()) return nullptr;
  auto it = sec->second.find(key);
  if (it == sec->second.end()) return nullptr;
  return &it->second;
}

Document parse(const std::string& text) {
  Document doc;
  doc.sections[""] = {};
  doc.section_lines[""] = 0;
  Cursor cur{text};
  std::string section;

  while (!cur.done()) {
    cur.skip_inline_ws();
    if (cur.done()) break;
    char c = cur.peek();
    if (c == '\n') {
      cur.take();
      continue;
    }
    if (c == '#') {
      while (!cur.done() && cur.peek() != '\n') ++cur.pos;
      continue;
    }
    if (c == '[') {
      const int line = cur.line;
      cur.take();
      std::string name;
      while (!cur.done() && bare_char(cur.peek())) name += cur.take();
      if (cur.done() || cur.peek() != ']')
        parse_fail(line, "malformed section header");
      cur.take();
      if (name.empty()) parse_fail(line, "empty section name");
      if (doc.sections.count(name))
        parse_fail(line, "section [" + name + "] opened twice");
      doc.sections[name] = {};
      doc.section_lines[name] = line;
      section = name;
      cur.skip_inline_ws();
      if (!cur.done() && cur.peek() == '#')
        while (!cur.done() && cur.peek() != '\n') ++cur.pos;
      if (!cur.done() && cur.peek() != '\n')
        parse_fail(line, "trailing characters after section header");
      continue;
    }

    const int line = cur.line;
    std::string key;
    while (!cur.done() && bare_char(cur.peek())) key += cur.take();
    if (key.empty()) parse_fail(line, "expected a key");
    cur.skip_inline_ws();
    if (cur.done() || cur.peek() != '=')
      parse_fail(line, "expected '=' after key '" + key + "'");
    cur.take();
    Value v = parse_value(cur);
    v.line = line;
    cur.skip_inline_ws();
    if (!cur.done() && cur.peek() == '#')
      while (!cur.done() && cur.peek() != '\n') ++cur.pos;
    if (!cur.done() && cur.peek() != '\n')
      parse_fail(line, "trailing characters after value for '" + key + "'");
    auto& table = doc.sections[section];
    if (table.count(key))
      parse_fail(line, "duplicate key '" + key + "'" +
                           (section.empty() ? "" : " in [" + section + "]"));
    table.emplace(key, std::move(v));
  }
  return doc;
}

Document parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace toml
}  // namespace pgc
