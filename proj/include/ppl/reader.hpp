#ifndef PPL_READER_HPP
#define PPL_READER_HPP

#include <cctype>
#include <charconv>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ppl/value.hpp"

namespace ppl {

struct SourcePos {
  int line = 0;
  int column = 0;
};

/// Syntax error with the 1-based position where it was detected.
class ReadError : public std::runtime_error {
 public:
  ReadError(const std::string& what, SourcePos pos)
      : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " +
                           what),
        pos_(pos) {}
  SourcePos pos() const { return pos_; }

 private:
  SourcePos pos_;
};

/// Parsed s-expression. Compound kinds keep their children in `items`;
/// maps store keys and values alternately, and a quoted form has exactly
/// one child.
struct Form {
  enum class Kind { Symbol, Keyword, Int, Real, Bool, Str, Nil, List, Vector, Map, Set, Quoted };

  Kind kind = Kind::Nil;
  std::variant<std::monostate, std::string, std::int64_t, double, bool, std::vector<Form>> data;
  SourcePos pos;

  static Form symbol(std::string name, SourcePos p = {}) { return {Kind::Symbol, std::move(name), p}; }
  static Form keyword(std::string name, SourcePos p = {}) { return {Kind::Keyword, std::move(name), p}; }
  static Form integer(std::int64_t i, SourcePos p = {}) { return {Kind::Int, i, p}; }
  static Form real(double d, SourcePos p = {}) { return {Kind::Real, d, p}; }
  static Form boolean(bool b, SourcePos p = {}) { return {Kind::Bool, b, p}; }
  static Form string(std::string s, SourcePos p = {}) { return {Kind::Str, std::move(s), p}; }
  static Form nil(SourcePos p = {}) { return {Kind::Nil, std::monostate{}, p}; }
  static Form compound(Kind k, std::vector<Form> items, SourcePos p = {}) {
    return {k, std::move(items), p};
  }
  static Form list(std::vector<Form> items, SourcePos p = {}) {
    return compound(Kind::List, std::move(items), p);
  }
  static Form vector(std::vector<Form> items, SourcePos p = {}) {
    return compound(Kind::Vector, std::move(items), p);
  }
  static Form quoted(Form inner, SourcePos p = {}) {
    return compound(Kind::Quoted, {std::move(inner)}, p);
  }

  bool is(Kind k) const { return kind == k; }
  bool is_symbol(std::string_view name) const {
    return kind == Kind::Symbol && std::get<std::string>(data) == name;
  }
  bool is_compound() const {
    return kind == Kind::List || kind == Kind::Vector || kind == Kind::Map ||
           kind == Kind::Set || kind == Kind::Quoted;
  }
  const std::string& text() const { return std::get<std::string>(data); }
  std::int64_t int_value() const { return std::get<std::int64_t>(data); }
  double real_value() const { return std::get<double>(data); }
  bool bool_value() const { return std::get<bool>(data); }
  const std::vector<Form>& items() const { return std::get<std::vector<Form>>(data); }
};

/// Structural equality; source positions are ignored.
inline bool operator==(const Form& a, const Form& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == Form::Kind::Real) {
    double x = a.real_value(), y = b.real_value();
    return x == y || (std::isnan(x) && std::isnan(y));
  }
  if (a.is_compound()) {
    const auto& ia = a.items();
    const auto& ib = b.items();
    if (ia.size() != ib.size()) return false;
    for (std::size_t i = 0; i < ia.size(); ++i) {
      if (!(ia[i] == ib[i])) return false;
    }
    return true;
  }
  return a.data == b.data;
}
inline bool operator!=(const Form& a, const Form& b) { return !(a == b); }

inline std::string to_string(const Form& f) {
  using K = Form::Kind;
  auto join = [](const std::vector<Form>& items, const char* open, const char* close) {
    std::string out = open;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += ' ';
      out += to_string(items[i]);
    }
    return out + close;
  };
  switch (f.kind) {
    case K::Symbol: return f.text();
    case K::Keyword: return ":" + f.text();
    case K::Int: return std::to_string(f.int_value());
    case K::Real: return format_real(f.real_value());
    case K::Bool: return f.bool_value() ? "true" : "false";
    case K::Str: return escape_string(f.text());
    case K::Nil: return "nil";
    case K::List: return join(f.items(), "(", ")");
    case K::Vector: return join(f.items(), "[", "]");
    case K::Map: return join(f.items(), "{", "}");
    case K::Set: return join(f.items(), "#{", "}");
    case K::Quoted: return "'" + to_string(f.items()[0]);
  }
  return "";
}

/// Literal data denoted by a form, as produced by `quote`.
inline Value to_value(const Form& f) {
  using K = Form::Kind;
  auto convert = [](const std::vector<Form>& items) {
    Items out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(to_value(item));
    return out;
  };
  switch (f.kind) {
    case K::Symbol: return Symbol{f.text()};
    case K::Keyword: return Keyword{f.text()};
    case K::Int: return f.int_value();
    case K::Real: return f.real_value();
    case K::Bool: return f.bool_value();
    case K::Str: return f.text();
    case K::Nil: return Value();
    case K::List: return make_list(convert(f.items()));
    case K::Vector: return make_vector(convert(f.items()));
    case K::Map: {
      MapData data;
      const auto& items = f.items();
      for (std::size_t i = 0; i + 1 < items.size(); i += 2) {
        data[to_value(items[i])] = to_value(items[i + 1]);
      }
      return make_map(std::move(data));
    }
    case K::Set: {
      Items items = convert(f.items());
      return make_set(SetData(items.begin(), items.end()));
    }
    case K::Quoted: return make_list({Symbol{"quote"}, to_value(f.items()[0])});
  }
  return Value();
}

namespace detail {

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<Form> read_all() {
    std::vector<Form> forms;
    for (;;) {
      skip_space();
      if (at_end()) return forms;
      if (is_closer(peek())) fail(std::string("unexpected '") + peek() + "'");
      forms.push_back(read());
    }
  }

 private:
  static bool is_closer(char c) { return c == ')' || c == ']' || c == '}'; }
  static bool is_delimiter(char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '(' || c == ')' ||
           c == '[' || c == ']' || c == '{' || c == '}' || c == '"' || c == ';';
  }

  bool at_end() const { return i_ >= text_.size(); }
  char peek() const { return text_[i_]; }
  SourcePos here() const { return {line_, col_}; }

  char advance() {
    char c = text_[i_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ReadError(what, here()); }
  [[noreturn]] static void fail_at(const std::string& what, SourcePos p) { throw ReadError(what, p); }

  void skip_space() {
    while (!at_end()) {
      char c = peek();
      if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
        advance();
      } else if (c == ';') {
        while (!at_end() && peek() != '\n') advance();
      } else {
        return;
      }
    }
  }

  Form read() {
    SourcePos start = here();
    char c = peek();
    switch (c) {
      case '(':
        advance();
        return Form::list(read_until(')', start), start);
      case '[':
        advance();
        return Form::vector(read_until(']', start), start);
      case '{': {
        advance();
        auto items = read_until('}', start);
        if (items.size() % 2) fail_at("map literal must contain an even number of forms", start);
        for (std::size_t i = 0; i < items.size(); i += 2) {
          for (std::size_t j = 0; j < i; j += 2) {
            if (items[i] == items[j]) fail_at("duplicate key: " + to_string(items[i]), items[i].pos);
          }
        }
        return Form::compound(Form::Kind::Map, std::move(items), start);
      }
      case '#':
        return read_dispatch(start);
      case '\'': {
        advance();
        skip_space();
        if (at_end()) fail("end of input after quote");
        if (is_closer(peek())) fail(std::string("unexpected '") + peek() + "' after quote");
        return Form::quoted(read(), start);
      }
      case '"':
        return read_string(start);
      case '\\':
        fail("unsupported syntax: character literal");
      case '^':
        fail("unsupported syntax: metadata");
      case '@':
      case '`':
      case '~':
        fail(std::string("unsupported syntax: '") + c + "'");
      default:
        return read_atom(start);
    }
  }

  std::vector<Form> read_until(char closer, SourcePos open) {
    std::vector<Form> items;
    for (;;) {
      skip_space();
      if (at_end()) fail_at(std::string("unbalanced delimiter: missing '") + closer + "'", open);
      char c = peek();
      if (c == closer) {
        advance();
        return items;
      }
      if (is_closer(c)) fail(std::string("unbalanced delimiter: expected '") + closer + "', got '" + c + "'");
      items.push_back(read());
    }
  }

  Form read_dispatch(SourcePos start) {
    advance();
    if (at_end()) fail("unexpected end of input after '#'");
    char c = peek();
    if (c == '{') {
      advance();
      auto items = read_until('}', start);
      for (std::size_t i = 0; i < items.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          if (items[i] == items[j]) fail_at("duplicate set element: " + to_string(items[i]), items[i].pos);
        }
      }
      return Form::compound(Form::Kind::Set, std::move(items), start);
    }
    if (c == '#') {
      advance();
      std::string tok = read_token();
      if (tok == "Inf") return Form::real(std::numeric_limits<double>::infinity(), start);
      if (tok == "-Inf") return Form::real(-std::numeric_limits<double>::infinity(), start);
      if (tok == "NaN") return Form::real(std::numeric_limits<double>::quiet_NaN(), start);
      fail_at("invalid token: ##" + tok, start);
    }
    if (c == '"') fail_at("unsupported syntax: regex literal", start);
    fail_at(std::string("unsupported syntax: '#") + c + "'", start);
  }

  Form read_string(SourcePos start) {
    advance();
    std::string out;
    for (;;) {
      if (at_end()) fail_at("unterminated string", start);
      char c = advance();
      if (c == '"') return Form::string(std::move(out), start);
      if (c != '\\') {
        out += c;
        continue;
      }
      if (at_end()) fail_at("unterminated string", start);
      char e = advance();
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("invalid escape: \\") + e);
      }
    }
  }

  std::string read_token() {
    std::size_t begin = i_;
    while (!at_end() && !is_delimiter(peek())) advance();
    return std::string(text_.substr(begin, i_ - begin));
  }

  static bool symbol_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) ||
           std::string_view("*+!-_'?<>=/.&$%:").find(c) != std::string_view::npos;
  }

  Form read_atom(SourcePos start) {
    std::string tok = read_token();
    if (tok.empty()) fail_at(std::string("invalid token: '") + peek() + "'", start);
    bool sign = tok[0] == '-' || tok[0] == '+';
    if (std::isdigit(static_cast<unsigned char>(tok[0])) ||
        (sign && tok.size() > 1 && std::isdigit(static_cast<unsigned char>(tok[1])))) {
      return read_number(tok, start);
    }
    for (char c : tok) {
      if (!symbol_char(c)) fail_at("invalid token: " + tok, start);
    }
    if (tok[0] == ':') {
      std::string name = tok.substr(1);
      if (name.empty() || name == ":" || name.back() == ':' || name.find("::") != std::string::npos ||
          (name[0] == ':' && name.size() == 1)) {
        fail_at("invalid token: " + tok, start);
      }
      return Form::keyword(std::move(name), start);
    }
    if (tok.find(':') != std::string::npos) fail_at("invalid token: " + tok, start);
    if (tok == "nil") return Form::nil(start);
    if (tok == "true") return Form::boolean(true, start);
    if (tok == "false") return Form::boolean(false, start);
    if (tok.size() > 1 && tok.back() == '/') fail_at("invalid token: " + tok, start);
    return Form::symbol(std::move(tok), start);
  }

  static Form read_number(const std::string& tok, SourcePos start) {
    const char* b = tok.data();
    const char* e = b + tok.size();
    if (*b == '+') ++b;
    bool is_real = tok.find_first_of(".eE") != std::string::npos;
    if (!is_real) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec == std::errc::result_out_of_range) fail_at("integer out of range: " + tok, start);
      if (ec != std::errc() || p != e) fail_at("invalid number: " + tok, start);
      return Form::integer(v, start);
    }
    // `13.` is a real with an empty fraction.
    std::string norm(b, e);
    auto dot = norm.find('.');
    if (dot != std::string::npos &&
        (dot + 1 == norm.size() || !std::isdigit(static_cast<unsigned char>(norm[dot + 1])))) {
      norm.insert(dot + 1, "0");
    }
    double v = 0;
    auto [p, ec] = std::from_chars(norm.data(), norm.data() + norm.size(), v);
    if (ec != std::errc() || p != norm.data() + norm.size()) fail_at("invalid number: " + tok, start);
    return Form::real(v, start);
  }

  std::string_view text_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace detail

/// Reads every top-level form in `text`, in order.
inline std::vector<Form> read_forms(std::string_view text) {
  return detail::Reader(text).read_all();
}

/// Reads exactly one form.
inline Form read_form(std::string_view text) {
  auto forms = read_forms(text);
  if (forms.size() != 1) {
    throw ReadError("expected exactly one form, found " + std::to_string(forms.size()), {1, 1});
  }
  return std::move(forms.front());
}

}  // namespace ppl

#endif  // PPL_READER_HPP
