#include "bfa/minidb/query.hpp"

#include <charconv>

namespace bfa::minidb {

const char* op_text(CompareOp op) {
  switch (op) {
  case CompareOp::Eq: return "=";
  case CompareOp::Lt: return "<";
  case CompareOp::Gt: return ">";
  case CompareOp::Le: return "<=";
  case CompareOp::Ge: return ">=";
  case CompareOp::Ne: return "<>";
  }
  return "?";
}

bool compare(const Value& lhs, CompareOp op, const Value& rhs) {
  switch (op) {
  case CompareOp::Eq: return lhs == rhs;
  case CompareOp::Lt: return lhs < rhs;
  case CompareOp::Gt: return lhs > rhs;
  case CompareOp::Le: return lhs <= rhs;
  case CompareOp::Ge: return lhs >= rhs;
  case CompareOp::Ne: return lhs != rhs;
  }
  return false;
}

std::string literal_text(const Value& v) {
  if (std::holds_alternative<std::string>(v)) return "'" + std::get<std::string>(v) + "'";
  return canonical(v);
}

namespace {

enum class Tok { Ident, Keyword, Number, String, Symbol, End };

struct Token {
  Tok kind = Tok::End;
  std::string text; // keywords upper-cased, identifiers lower-cased
  std::size_t offset = 0; // 1-based
};

bool is_keyword(const std::string& upper) {
  return upper == "SELECT" || upper == "FROM" || upper == "JOIN" || upper == "ON" || upper == "WHERE" ||
         upper == "AND" || upper == "LIMIT";
}

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    Token t;
    t.offset = i + 1;
    if (std::isalpha(c) || c == '_') {
      auto start = i;
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      std::string word(s.substr(start, i - start));
      std::string upper = word;
      for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      if (is_keyword(upper)) {
        t.kind = Tok::Keyword;
        t.text = upper;
      } else {
        t.kind = Tok::Ident;
        t.text = to_lower(word);
      }
    } else if (std::isdigit(c) || (c == '-' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      auto start = i++;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      t.kind = Tok::Number;
      t.text = std::string(s.substr(start, i - start));
    } else if (c == '\'') {
      auto close = s.find('\'', i + 1);
      if (close == std::string_view::npos) throw SqlError("unterminated string literal", i + 1);
      t.kind = Tok::String;
      t.text = std::string(s.substr(i + 1, close - i - 1));
      i = close + 1;
    } else {
      t.kind = Tok::Symbol;
      auto two = s.substr(i, 2);
      if (two == "<=" || two == ">=" || two == "<>") {
        t.text = std::string(two);
        i += 2;
      } else if (std::string_view("*,.=<>;").find(static_cast<char>(c)) != std::string_view::npos) {
        t.text = std::string(1, static_cast<char>(c));
        ++i;
      } else if (two == "!=" || two == "==") {
        throw SqlError("unknown operator '" + std::string(two) + "'", i + 1);
      } else {
        throw SqlError(std::string("unexpected character '") + static_cast<char>(c) + "'", i + 1);
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.offset = s.size() + 1;
  out.push_back(end);
  return out;
}

class Parser {
public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  QueryAst parse() {
    QueryAst q;
    expect_keyword("SELECT");
    if (peek_symbol("*")) {
      advance();
      q.star = true;
    } else {
      q.projections.push_back(column_ref());
      while (peek_symbol(",")) {
        advance();
        q.projections.push_back(column_ref());
      }
    }
    expect_keyword("FROM");
    q.base = identifier("table name");
    while (peek_keyword("JOIN")) {
      advance();
      JoinClause j;
      j.table = identifier("table name");
      expect_keyword("ON");
      j.left = column_ref();
      expect_symbol("=");
      j.right = column_ref();
      q.joins.push_back(std::move(j));
    }
    if (peek_keyword("WHERE")) {
      advance();
      q.predicates.push_back(predicate());
      while (peek_keyword("AND")) {
        advance();
        q.predicates.push_back(predicate());
      }
    }
    while (peek_keyword("LIMIT")) {
      if (q.limit) throw SqlError("duplicate LIMIT", cur().offset);
      advance();
      const auto& t = cur();
      if (t.kind != Tok::Number || t.text.front() == '-') throw SqlError("expected non-negative LIMIT count", t.offset);
      q.limit = number(t);
      advance();
    }
    if (peek_symbol(";")) advance();
    if (cur().kind != Tok::End) throw SqlError("unexpected '" + cur().text + "'", cur().offset);
    return q;
  }

private:
  const Token& cur() const { return toks_[pos_]; }
  void advance() {
    if (pos_ + 1 < toks_.size()) ++pos_;
  }
  bool peek_keyword(const char* k) const { return cur().kind == Tok::Keyword && cur().text == k; }
  bool peek_symbol(const char* s) const { return cur().kind == Tok::Symbol && cur().text == s; }

  [[noreturn]] void syntax(const std::string& expected) const {
    auto found = cur().kind == Tok::End ? std::string("end of query") : "'" + cur().text + "'";
    throw SqlError("syntax error: expected " + expected + ", found " + found, cur().offset);
  }

  void expect_keyword(const char* k) {
    if (!peek_keyword(k)) syntax(k);
    advance();
  }
  void expect_symbol(const char* s) {
    if (!peek_symbol(s)) syntax(std::string("'") + s + "'");
    advance();
  }

  std::string identifier(const char* what) {
    if (cur().kind != Tok::Ident) syntax(what);
    auto text = cur().text;
    advance();
    return text;
  }

  ColumnRef column_ref() {
    ColumnRef c;
    auto first = identifier("column");
    if (peek_symbol(".")) {
      advance();
      c.table = first;
      c.column = identifier("column");
    } else {
      c.column = first;
    }
    return c;
  }

  std::int64_t number(const Token& t) const {
    std::int64_t v = 0;
    auto [end, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc{} || end != t.text.data() + t.text.size()) throw SqlError("integer out of range", t.offset);
    return v;
  }

  Predicate predicate() {
    Predicate p;
    p.column = column_ref();
    const auto& op = cur();
    if (op.kind != Tok::Symbol) syntax("comparison operator");
    if (op.text == "=") p.op = CompareOp::Eq;
    else if (op.text == "<") p.op = CompareOp::Lt;
    else if (op.text == ">") p.op = CompareOp::Gt;
    else if (op.text == "<=") p.op = CompareOp::Le;
    else if (op.text == ">=") p.op = CompareOp::Ge;
    else if (op.text == "<>") p.op = CompareOp::Ne;
    else throw SqlError("unknown operator '" + op.text + "'", op.offset);
    advance();
    const auto& k = cur();
    if (k.kind == Tok::Number) p.constant = number(k);
    else if (k.kind == Tok::String) p.constant = k.text;
    else syntax("constant");
    advance();
    return p;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

} // namespace

QueryAst parse_query(std::string_view text) { return Parser(tokenize(text)).parse(); }

} // namespace bfa::minidb
