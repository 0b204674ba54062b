#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fpv/error.hpp"

namespace fpv::sexpr {

/// One node of a parsed s-expression. Atoms are lowercased on read; lists
/// hold their children in order. Positions are 1-based.
struct Node {
  bool is_list = false;
  std::string atom;
  std::vector<Node> children;
  std::size_t line = 1;
  std::size_t column = 1;

  bool is_atom() const noexcept { return !is_list; }
  bool is_atom(std::string_view text) const noexcept {
    return !is_list && atom == text;
  }
  /// True for a list whose first child is the atom `head`.
  bool has_head(std::string_view head) const noexcept {
    return is_list && !children.empty() && children.front().is_atom(head);
  }
};

namespace detail {

class Reader {
public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<Node> read_all() {
    std::vector<Node> nodes;
    skip_space();
    while (pos_ < text_.size()) {
      nodes.push_back(read_node());
      skip_space();
    }
    return nodes;
  }

private:
  char peek() const { return text_[pos_]; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = peek();
      if (c == ';') {
        while (pos_ < text_.size() && peek() != '\n')
          advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  Node read_node() {
    Node node;
    node.line = line_;
    node.column = column_;
    const char c = peek();
    if (c == ')')
      throw ParseError("unexpected ')'", line_, column_);
    if (c == '(') {
      node.is_list = true;
      advance();
      for (;;) {
        skip_space();
        if (pos_ >= text_.size())
          throw ParseError("unterminated list opened", node.line, node.column);
        if (peek() == ')') {
          advance();
          return node;
        }
        node.children.push_back(read_node());
      }
    }
    while (pos_ < text_.size()) {
      const char d = peek();
      if (d == '(' || d == ')' || d == ';' ||
          std::isspace(static_cast<unsigned char>(d)))
        break;
      node.atom.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(d))));
      advance();
    }
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

} // namespace detail

/// Reads every top-level expression in `text`.
inline std::vector<Node> read_all(std::string_view text) {
  return detail::Reader(text).read_all();
}

/// Reads exactly one top-level expression; empty input or trailing
/// expressions are syntax errors.
inline Node read_one(std::string_view text) {
  auto nodes = read_all(text);
  if (nodes.empty())
    throw ParseError("empty input", 1, 1);
  if (nodes.size() > 1)
    throw ParseError("unexpected trailing expression", nodes[1].line,
                     nodes[1].column);
  return std::move(nodes.front());
}

} // namespace fpv::sexpr
