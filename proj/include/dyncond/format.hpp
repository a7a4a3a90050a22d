#pragma once

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dyncond/types.hpp"

namespace dyncond {

/// Text format for networks:
///
///   # comment to end of line
///   var <name> <cardinality> <value-name>...
///   cpt <child> | <parent>...
///   <row of probabilities, one row per parent instantiation>
///
/// Rows follow the CPT layout: the last listed parent varies fastest.
/// Tokens are whitespace separated; line breaks only matter for comments.

namespace detail {

struct token {
  std::string text;
  int line = 0;
};

inline bool parses_as_number(std::string_view s) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

inline std::vector<token> tokenize(std::istream& in) {
  std::vector<token> tokens;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::istringstream fields(line);
    std::string word;
    while (fields >> word) tokens.push_back({word, line_no});
  }
  return tokens;
}

}  // namespace detail

/// Parses a network from .bnet text. Throws parse_error with a line
/// number on malformed input and model_error on semantic problems.
inline network parse_network(std::istream& in) {
  const std::vector<detail::token> tokens = detail::tokenize(in);
  std::size_t pos = 0;
  auto more = [&] { return pos < tokens.size(); };
  auto peek = [&]() -> const detail::token& { return tokens[pos]; };
  auto take = [&](const char* what) -> const detail::token& {
    if (!more())
      throw parse_error(std::string("unexpected end of input, expected ") +
                            what,
                        tokens.empty() ? 0 : tokens.back().line);
    return tokens[pos++];
  };

  std::vector<variable> vars;
  std::vector<cpt> cpt_by_child;
  std::vector<bool> has_cpt;
  std::unordered_map<std::string, var_id> by_name;

  auto lookup = [&](const detail::token& t) -> var_id {
    auto it = by_name.find(t.text);
    if (it == by_name.end())
      throw parse_error("unknown variable " + t.text, t.line);
    return it->second;
  };
  auto check_name = [&](const detail::token& t) {
    if (t.text == "var" || t.text == "cpt" || t.text == "|")
      throw parse_error("reserved word used as a name: " + t.text, t.line);
    if (detail::parses_as_number(t.text))
      throw parse_error("numeric token used as a name: " + t.text, t.line);
  };

  while (more()) {
    const detail::token& head = take("'var' or 'cpt'");
    if (head.text == "var") {
      const detail::token& name = take("variable name");
      check_name(name);
      if (by_name.count(name.text))
        throw parse_error("duplicate variable " + name.text, name.line);
      const detail::token& card_tok = take("cardinality");
      int card = 0;
      {
        auto [ptr, ec] = std::from_chars(
            card_tok.text.data(), card_tok.text.data() + card_tok.text.size(),
            card);
        if (ec != std::errc() ||
            ptr != card_tok.text.data() + card_tok.text.size())
          throw parse_error("cardinality must be an integer, got " +
                                card_tok.text,
                            card_tok.line);
      }
      if (card < 2)
        throw parse_error("variable " + name.text +
                              " must have cardinality at least 2",
                          card_tok.line);
      variable v;
      v.id = static_cast<var_id>(vars.size());
      v.name = name.text;
      v.cardinality = card;
      for (int i = 0; i < card; ++i) {
        const detail::token& value = take("value name");
        check_name(value);
        v.value_names.push_back(value.text);
      }
      by_name.emplace(v.name, v.id);
      vars.push_back(std::move(v));
      cpt_by_child.emplace_back();
      has_cpt.push_back(false);
    } else if (head.text == "cpt") {
      const detail::token& child_tok = take("child variable");
      var_id child = lookup(child_tok);
      if (has_cpt[static_cast<std::size_t>(child)])
        throw parse_error("duplicate CPT for " + child_tok.text,
                          child_tok.line);
      const detail::token& bar = take("'|'");
      if (bar.text != "|")
        throw parse_error("expected '|' after CPT child name", bar.line);
      cpt c;
      c.child = child;
      c.width = vars[static_cast<std::size_t>(child)].cardinality;
      std::size_t rows = 1;
      while (more() && !detail::parses_as_number(peek().text) &&
             peek().text != "var" && peek().text != "cpt") {
        const detail::token& parent_tok = take("parent name");
        var_id p = lookup(parent_tok);
        c.parents.push_back(p);
        rows *= static_cast<std::size_t>(
            vars[static_cast<std::size_t>(p)].cardinality);
      }
      const std::size_t need = rows * static_cast<std::size_t>(c.width);
      c.table.reserve(need);
      for (std::size_t i = 0; i < need; ++i) {
        const detail::token& num = take("probability");
        double p = 0.0;
        auto [ptr, ec] = std::from_chars(num.text.data(),
                                         num.text.data() + num.text.size(), p);
        if (ec != std::errc() || ptr != num.text.data() + num.text.size())
          throw parse_error("expected a probability, got " + num.text,
                            num.line);
        c.table.push_back(p);
      }
      has_cpt[static_cast<std::size_t>(child)] = true;
      cpt_by_child[static_cast<std::size_t>(child)] = std::move(c);
    } else {
      throw parse_error("expected 'var' or 'cpt', got " + head.text,
                        head.line);
    }
  }

  for (std::size_t i = 0; i < vars.size(); ++i)
    if (!has_cpt[i])
      throw parse_error("missing CPT for variable " + vars[i].name);

  return network(std::move(vars), std::move(cpt_by_child));
}

inline network parse_network(const std::string& text) {
  std::istringstream in(text);
  return parse_network(in);
}

namespace detail {

/// Shortest decimal form that round-trips the double exactly.
inline std::string format_probability(double p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", p);
  return buf;
}

}  // namespace detail

/// Writes the canonical text form: all var lines in id order, then all
/// cpt blocks in id order, one table row per line. Probabilities are
/// printed with 17 significant digits so parsing them back is exact.
inline void serialize_network(const network& net, std::ostream& out) {
  for (const variable& v : net.variables()) {
    out << "var " << v.name << ' ' << v.cardinality;
    for (const std::string& value : v.value_names) out << ' ' << value;
    out << '\n';
  }
  for (const variable& v : net.variables()) {
    const cpt& c = net.cpt_of(v.id);
    out << "cpt " << v.name << " |";
    for (var_id p : c.parents) out << ' ' << net.var(p).name;
    out << '\n';
    for (std::size_t r = 0; r < c.row_count(); ++r) {
      for (int x = 0; x < c.width; ++x) {
        if (x > 0) out << ' ';
        out << detail::format_probability(c.entry(r, x));
      }
      out << '\n';
    }
  }
}

inline std::string serialize_network(const network& net) {
  std::ostringstream out;
  serialize_network(net, out);
  return out.str();
}

}  // namespace dyncond
