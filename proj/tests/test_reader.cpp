#include <gtest/gtest.h>

#include <random>

#include "ppl/reader.hpp"

using ppl::Form;
using ppl::read_form;
using ppl::read_forms;
using ppl::ReadError;
using ppl::SourcePos;
using K = Form::Kind;

namespace {

Form sym(const std::string& s) { return Form::symbol(s); }

SourcePos error_pos(const std::string& text) {
  try {
    read_forms(text);
  } catch (const ReadError& e) {
    return e.pos();
  }
  ADD_FAILURE() << "no error for " << text;
  return {};
}

std::string error_text(const std::string& text) {
  try {
    read_forms(text);
  } catch (const ReadError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Reader, ContinuationCall) {
  Form f = read_form("(cont 1 $state)");
  EXPECT_EQ(f, Form::list({sym("cont"), Form::integer(1), sym("$state")}));
}

TEST(Reader, EmptyInput) {
  EXPECT_TRUE(read_forms("").empty());
  EXPECT_TRUE(read_forms("  ; only a comment\n ,, ").empty());
}

TEST(Reader, SetLiteral) {
  Form f = read_form("#{0 1}");
  EXPECT_EQ(f, Form::compound(K::Set, {Form::integer(0), Form::integer(1)}));
}

TEST(Reader, QuoteShorthand) {
  Form f = read_form("'[1 2 3]");
  EXPECT_EQ(f, Form::quoted(Form::vector({Form::integer(1), Form::integer(2), Form::integer(3)})));
  EXPECT_EQ(ppl::to_string(f), "'[1 2 3]");
}

TEST(Reader, Atoms) {
  auto fs = read_forms("42 -7 +3 13. 2.5 -0.5e2 \"a\\nb\" :k ::mem true false nil & x->y Math/PI");
  ASSERT_EQ(fs.size(), 15u);
  EXPECT_EQ(fs[0], Form::integer(42));
  EXPECT_EQ(fs[1], Form::integer(-7));
  EXPECT_EQ(fs[2], Form::integer(3));
  EXPECT_EQ(fs[3], Form::real(13.0));
  EXPECT_EQ(fs[4], Form::real(2.5));
  EXPECT_EQ(fs[5], Form::real(-50.0));
  EXPECT_EQ(fs[6], Form::string("a\nb"));
  EXPECT_EQ(fs[7], Form::keyword("k"));
  EXPECT_EQ(fs[8], Form::keyword(":mem"));
  EXPECT_EQ(fs[9], Form::boolean(true));
  EXPECT_EQ(fs[10], Form::boolean(false));
  EXPECT_EQ(fs[11], Form::nil());
  EXPECT_EQ(fs[12], sym("&"));
  EXPECT_EQ(fs[13], sym("x->y"));
  EXPECT_EQ(fs[14], sym("Math/PI"));
}

TEST(Reader, IntAndRealAreDistinct) {
  EXPECT_NE(read_form("1"), read_form("1.0"));
  EXPECT_EQ(read_form("13."), read_form("13.0"));
}

TEST(Reader, CommasAreWhitespace) {
  EXPECT_EQ(read_form("{:a 1, :b 2}"), read_form("{:a 1 :b 2}"));
}

TEST(Reader, CommentsAndPositions) {
  auto fs = read_forms("; header\n(a\n  b) ; trailing\n[c]");
  ASSERT_EQ(fs.size(), 2u);
  EXPECT_EQ(fs[0].pos.line, 2);
  EXPECT_EQ(fs[0].pos.column, 1);
  EXPECT_EQ(fs[0].items()[1].pos.line, 3);
  EXPECT_EQ(fs[0].items()[1].pos.column, 3);
  EXPECT_EQ(fs[1].pos.line, 4);
}

TEST(Reader, UnbalancedDelimiterReportsPosition) {
  auto p = error_pos("(foo\n  (bar)");
  EXPECT_EQ(p.line, 1);
  EXPECT_EQ(p.column, 1);
  p = error_pos("(a b))");
  EXPECT_EQ(p.line, 1);
  EXPECT_EQ(p.column, 6);
  EXPECT_NE(error_text("[1 2)").find("unbalanced"), std::string::npos);
}

TEST(Reader, DuplicateMapKeyAndSetElement) {
  EXPECT_NE(error_text("{:a 1 :a 2}").find("duplicate key"), std::string::npos);
  EXPECT_NE(error_text("#{1 2 1}").find("duplicate set element"), std::string::npos);
  EXPECT_NE(error_text("{:a 1 :b}").find("even number"), std::string::npos);
  // 1 and 1.0 are different keys.
  EXPECT_NO_THROW(read_form("{1 :int 1.0 :real}"));
}

TEST(Reader, UnsupportedSyntax) {
  for (const char* text : {"\\a", "#\"re\"", "^:meta x", "@x", "`x", "~x", "#(inc %)"}) {
    EXPECT_NE(error_text(text).find("unsupported syntax"), std::string::npos) << text;
  }
}

TEST(Reader, InvalidTokens) {
  for (const char* text : {"1x", "1.2.3", "99999999999999999999", ":", "a:b", "\"open", "\"bad \\q\"", "'"}) {
    EXPECT_THROW(read_forms(text), ReadError) << text;
  }
}

TEST(Reader, ReadFormRequiresExactlyOne) {
  EXPECT_THROW(read_form("1 2"), ReadError);
  EXPECT_THROW(read_form(""), ReadError);
}

TEST(Reader, ToValueBuildsRuntimeData) {
  using ppl::Value;
  Value v = ppl::to_value(read_form("[1 :a \"s\" (x y) {:k #{2}}]"));
  EXPECT_EQ(ppl::to_string(v), "[1 :a \"s\" (x y) {:k #{2}}]");
  EXPECT_EQ(ppl::to_string(ppl::to_value(read_form("'x"))), "(quote x)");
}

namespace {

class FormGen {
 public:
  explicit FormGen(unsigned seed) : rng_(seed) {}

  Form gen(int depth) {
    int pick = static_cast<int>(rng_() % (depth > 0 ? 12 : 7));
    switch (pick) {
      case 0: return Form::symbol(symbols()[rng_() % symbols().size()]);
      case 1: return Form::keyword(symbols()[rng_() % symbols().size()]);
      case 2: return Form::integer(static_cast<std::int64_t>(rng_()) - (1LL << 31));
      case 3: {
        std::uniform_real_distribution<double> u(-1e6, 1e6);
        return Form::real(rng_() % 2 ? u(rng_) : static_cast<double>(rng_() % 100) / 4);
      }
      case 4: return Form::boolean(rng_() % 2);
      case 5: return Form::string(strings()[rng_() % strings().size()]);
      case 6: return Form::nil();
      case 7: return Form::list(items(depth));
      case 8: return Form::vector(items(depth));
      case 9: return Form::quoted(gen(depth - 1));
      case 10: return Form::compound(K::Set, distinct(items(depth)));
      default: {
        auto keys = distinct(items(depth));
        std::vector<Form> kv;
        for (auto& k : keys) {
          kv.push_back(k);
          kv.push_back(gen(depth - 1));
        }
        return Form::compound(K::Map, kv);
      }
    }
  }

 private:
  static const std::vector<std::string>& symbols() {
    static const std::vector<std::string> s{"x", "foo-bar", "a?", "+", "->sample", "$state", "Math/sqrt", "&", "p*"};
    return s;
  }
  static const std::vector<std::string>& strings() {
    static const std::vector<std::string> s{"", "plain", "with \"quotes\"", "tab\there", "back\\slash", "new\nline"};
    return s;
  }

  std::vector<Form> items(int depth) {
    std::vector<Form> out;
    std::size_t n = rng_() % 5;
    for (std::size_t i = 0; i < n; ++i) out.push_back(gen(depth - 1));
    return out;
  }

  static std::vector<Form> distinct(std::vector<Form> xs) {
    std::vector<Form> out;
    for (auto& x : xs) {
      bool dup = false;
      for (auto& y : out) dup = dup || x == y;
      if (!dup) out.push_back(std::move(x));
    }
    return out;
  }

  std::mt19937_64 rng_;
};

}  // namespace

TEST(ReaderProperty, PrintThenReadIsIdentity) {
  FormGen gen(20240501);
  for (int i = 0; i < 2000; ++i) {
    Form f = gen.gen(4);
    std::string text = ppl::to_string(f);
    Form back;
    ASSERT_NO_THROW(back = read_form(text)) << text;
    ASSERT_EQ(back, f) << text;
    EXPECT_EQ(ppl::to_string(back), text);
  }
}

TEST(ReaderProperty, ErrorsNeverCrash) {
  std::mt19937_64 rng(7);
  const std::string alphabet = "()[]{}#'\"\\;:^@ ax1.-&,\n";
  for (int i = 0; i < 5000; ++i) {
    std::string text;
    std::size_t n = rng() % 20;
    for (std::size_t j = 0; j < n; ++j) text += alphabet[rng() % alphabet.size()];
    try {
      read_forms(text);
    } catch (const ReadError&) {
    }
  }
  SUCCEED();
}
