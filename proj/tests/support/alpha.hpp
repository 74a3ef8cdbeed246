#ifndef PPL_TESTS_ALPHA_HPP
#define PPL_TESTS_ALPHA_HPP

#include <map>
#include <regex>
#include <string>

#include "ppl/reader.hpp"

namespace alpha {

/// Renames compiler-generated symbols (C12, V3, mem7, ...) to their prefix
/// plus order of first appearance, and normalizes whitespace by reading the
/// text back. Two IR texts are alpha-equivalent when their normal forms match.
inline std::string normalize(const std::string& text) {
  static const std::regex gen(R"(^(C|V|S|O|M|mem|P|loop)(\d+)$)");
  std::map<std::string, std::string> names;
  std::map<std::string, int> next;
  std::function<ppl::Form(const ppl::Form&)> walk = [&](const ppl::Form& f) -> ppl::Form {
    if (f.is(ppl::Form::Kind::Symbol)) {
      std::smatch m;
      const std::string& s = f.text();
      if (!std::regex_match(s, m, gen)) return f;
      auto it = names.find(s);
      if (it == names.end()) {
        it = names.emplace(s, m[1].str() + "_" + std::to_string(++next[m[1].str()])).first;
      }
      return ppl::Form::symbol(it->second);
    }
    if (!f.is_compound()) return f;
    std::vector<ppl::Form> items;
    for (const auto& i : f.items()) items.push_back(walk(i));
    return ppl::Form::compound(f.kind, std::move(items));
  };
  std::string out;
  for (const auto& f : ppl::read_forms(text)) {
    if (!out.empty()) out += " ";
    out += ppl::to_string(walk(f));
  }
  return out;
}

inline bool equivalent(const std::string& a, const std::string& b) { return normalize(a) == normalize(b); }

}  // namespace alpha

#endif  // PPL_TESTS_ALPHA_HPP
