#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "fpv/error.hpp"
#include "fpv/sexpr.hpp"

namespace fpv::pddl {

inline constexpr std::string_view kRootType = "object";
inline constexpr std::string_view kComplementPrefix = "not-";

struct TypedName {
  std::string name;
  std::string type{kRootType};
  bool operator==(const TypedName &) const = default;
};

/// Predicate applied to terms. In schemas a term starting with '?' is a
/// variable, anything else a constant; in problems every term is an object.
struct Atom {
  std::string predicate;
  std::vector<std::string> args;
  bool operator==(const Atom &) const = default;
  auto operator<=>(const Atom &) const = default;
};

struct Literal {
  Atom atom;
  bool negated = false;
  bool operator==(const Literal &) const = default;
};

struct PredicateDecl {
  std::string name;
  std::vector<TypedName> params;
  bool operator==(const PredicateDecl &) const = default;
};

struct ActionSchema {
  std::string name;
  std::vector<TypedName> params;
  std::vector<Literal> precondition;
  std::vector<Atom> add;
  std::vector<Atom> del;
  double cost = 1.0;
  bool operator==(const ActionSchema &) const = default;
};

struct DomainAst {
  std::string name;
  std::vector<std::string> requirements;
  /// type name -> parent type name; the root type is implicit.
  std::map<std::string, std::string> types;
  std::vector<TypedName> constants;
  std::vector<PredicateDecl> predicates;
  std::vector<ActionSchema> actions;
  /// complement predicate -> original, filled by compile_negations.
  std::map<std::string, std::string> complements;
  bool operator==(const DomainAst &) const = default;

  const PredicateDecl *find_predicate(std::string_view pred) const {
    for (const auto &p : predicates)
      if (p.name == pred)
        return &p;
    return nullptr;
  }

  bool has_type(std::string_view type) const {
    return type == kRootType || types.count(std::string(type)) > 0;
  }

  /// True if `type` equals `ancestor` or descends from it.
  bool is_subtype(std::string type, std::string_view ancestor) const {
    for (std::size_t guard = 0; guard <= types.size() + 1; ++guard) {
      if (type == ancestor)
        return true;
      auto it = types.find(type);
      if (it == types.end())
        return false;
      type = it->second;
    }
    return false;
  }
};

struct ProblemAst {
  std::string name;
  std::string domain_name;
  std::vector<TypedName> objects;
  std::vector<Atom> init;
  std::vector<Literal> goal;
  bool operator==(const ProblemAst &) const = default;
};

inline const std::vector<std::string> &supported_requirements() {
  static const std::vector<std::string> tags = {
      ":strips", ":typing", ":negative-preconditions", ":action-costs"};
  return tags;
}

inline std::string to_string(const Atom &atom) {
  std::string out = "(" + atom.predicate;
  for (const auto &a : atom.args)
    out += " " + a;
  out += ")";
  return out;
}

inline std::string to_string(const Literal &lit) {
  return lit.negated ? "(not " + to_string(lit.atom) + ")"
                     : to_string(lit.atom);
}

inline bool is_variable(std::string_view term) {
  return !term.empty() && term.front() == '?';
}

namespace detail {

using sexpr::Node;

[[noreturn]] inline void fail(const Node &at, const std::string &what) {
  throw ParseError(what, at.line, at.column);
}

inline const std::string &expect_atom(const Node &node, const char *what) {
  if (!node.is_atom())
    fail(node, std::string("expected ") + what);
  return node.atom;
}

inline void expect_list(const Node &node, const char *what) {
  if (!node.is_list)
    fail(node, std::string("expected ") + what);
}

/// Parses "a b - t c - u d" style typed lists; untyped names get the root
/// type.
inline std::vector<TypedName> parse_typed_list(const Node &list,
                                               std::size_t first = 0) {
  std::vector<TypedName> out;
  std::size_t pending = 0;
  const auto &items = list.children;
  for (std::size_t i = first; i < items.size(); ++i) {
    const Node &item = items[i];
    if (item.is_atom("-")) {
      if (i + 1 >= items.size())
        fail(item, "missing type after '-'");
      const Node &type = items[i + 1];
      if (type.has_head("either"))
        fail(type, "unsupported construct 'either'");
      const std::string &tname = expect_atom(type, "type name");
      for (std::size_t k = out.size() - pending; k < out.size(); ++k)
        out[k].type = tname;
      pending = 0;
      ++i;
      continue;
    }
    out.push_back({expect_atom(item, "name"), std::string(kRootType)});
    ++pending;
  }
  return out;
}

inline Atom parse_atom(const Node &node) {
  expect_list(node, "atom");
  if (node.children.empty())
    fail(node, "empty atom");
  Atom atom;
  atom.predicate = expect_atom(node.children.front(), "predicate name");
  for (std::size_t i = 1; i < node.children.size(); ++i)
    atom.args.push_back(expect_atom(node.children[i], "term"));
  return atom;
}

inline void reject_unsupported(const Node &node) {
  static const char *const kUnsupported[] = {
      "or", "imply", "exists", "forall", "when", "=", "preference",
      "assign", "decrease", "scale-up", "scale-down"};
  if (!node.is_list || node.children.empty() || !node.children[0].is_atom())
    return;
  // "at" is an ordinary predicate name unless it opens a timed condition
  if (node.children.size() > 1 &&
      ((node.children[0].atom == "at" &&
        (node.children[1].is_atom("start") || node.children[1].is_atom("end"))) ||
       (node.children[0].atom == "over" && node.children[1].is_atom("all"))))
    fail(node, "unsupported construct '" + node.children[0].atom + " " +
                   node.children[1].atom + "'");
  for (const char *head : kUnsupported)
    if (node.children[0].atom == head)
      fail(node, "unsupported construct '" + node.children[0].atom + "'");
}

inline void parse_literals(const Node &node, std::vector<Literal> &out) {
  expect_list(node, "formula");
  if (node.children.empty())
    return;
  reject_unsupported(node);
  if (node.has_head("and")) {
    for (std::size_t i = 1; i < node.children.size(); ++i)
      parse_literals(node.children[i], out);
    return;
  }
  if (node.has_head("not")) {
    if (node.children.size() != 2)
      fail(node, "'not' takes exactly one atom");
    reject_unsupported(node.children[1]);
    out.push_back({parse_atom(node.children[1]), true});
    return;
  }
  out.push_back({parse_atom(node), false});
}

inline double parse_cost(const Node &node) {
  const std::string &text = expect_atom(node, "numeric action cost");
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail(node, "action cost must be a numeric constant, got '" + text + "'");
  if (value < 0.0)
    fail(node, "action cost must be non-negative");
  return value;
}

inline void parse_effects(const Node &node, ActionSchema &schema,
                          bool &saw_cost) {
  expect_list(node, "effect");
  if (node.children.empty())
    return;
  reject_unsupported(node);
  if (node.has_head("and")) {
    for (std::size_t i = 1; i < node.children.size(); ++i)
      parse_effects(node.children[i], schema, saw_cost);
    return;
  }
  if (node.has_head("increase")) {
    if (node.children.size() != 3 ||
        !node.children[1].has_head("total-cost") ||
        node.children[1].children.size() != 1)
      fail(node, "only (increase (total-cost) <number>) is supported");
    const double cost = parse_cost(node.children[2]);
    schema.cost = saw_cost ? schema.cost + cost : cost;
    saw_cost = true;
    return;
  }
  if (node.has_head("not")) {
    if (node.children.size() != 2)
      fail(node, "'not' takes exactly one atom");
    schema.del.push_back(parse_atom(node.children[1]));
    return;
  }
  schema.add.push_back(parse_atom(node));
}

/// Finds "(define (<kind> name) ...)" and returns the name node.
inline const Node &expect_define(const Node &root, const char *kind) {
  if (!root.has_head("define") || root.children.size() < 2)
    fail(root, "expected (define ...)");
  const Node &header = root.children[1];
  if (!header.has_head(kind) || header.children.size() != 2)
    fail(header, std::string("expected (") + kind + " <name>)");
  return header.children[1];
}

inline void check_requirements(const Node &section,
                               std::vector<std::string> &out) {
  for (std::size_t i = 1; i < section.children.size(); ++i) {
    const std::string &tag =
        expect_atom(section.children[i], "requirement tag");
    const auto &ok = supported_requirements();
    if (std::find(ok.begin(), ok.end(), tag) == ok.end())
      throw UnsupportedRequirement(tag, section.children[i].line,
                                   section.children[i].column);
    out.push_back(tag);
  }
}

class DomainValidator {
public:
  explicit DomainValidator(const DomainAst &domain) : domain_(domain) {}

  void check_term_list(const std::vector<TypedName> &names,
                       const char *what) const {
    for (const auto &n : names)
      if (!domain_.has_type(n.type))
        throw ValidationError(std::string("undeclared type '") + n.type +
                              "' for " + what + " '" + n.name + "'");
  }

  void check_atom(const Atom &atom, const std::set<std::string> &vars,
                  const std::string &where) const {
    const PredicateDecl *decl = domain_.find_predicate(atom.predicate);
    if (decl == nullptr)
      throw ValidationError("undeclared predicate '" + atom.predicate +
                            "' in " + where);
    if (decl->params.size() != atom.args.size())
      throw ValidationError(
          "arity mismatch for '" + atom.predicate + "' in " + where +
          ": expected " + std::to_string(decl->params.size()) + ", got " +
          std::to_string(atom.args.size()));
    for (const auto &arg : atom.args) {
      if (is_variable(arg)) {
        if (vars.count(arg) == 0)
          throw ValidationError("undeclared variable '" + arg + "' in " +
                                where);
      } else if (!is_constant(arg)) {
        throw ValidationError("undeclared constant '" + arg + "' in " +
                              where);
      }
    }
  }

  void validate() const {
    check_term_list(domain_.constants, "constant");
    std::set<std::string> pred_names;
    for (const auto &p : domain_.predicates) {
      if (!pred_names.insert(p.name).second)
        throw ValidationError("duplicate predicate '" + p.name + "'");
      check_term_list(p.params, "parameter");
    }
    std::set<std::string> schema_names;
    for (const auto &a : domain_.actions) {
      if (!schema_names.insert(a.name).second)
        throw ValidationError("duplicate action schema '" + a.name + "'");
      check_term_list(a.params, "parameter");
      std::set<std::string> vars;
      for (const auto &p : a.params) {
        if (!is_variable(p.name))
          throw ValidationError("parameter '" + p.name + "' of '" + a.name +
                                "' is not a variable");
        vars.insert(p.name);
      }
      const std::string where = "action '" + a.name + "'";
      for (const auto &lit : a.precondition)
        check_atom(lit.atom, vars, where);
      for (const auto &atom : a.add)
        check_atom(atom, vars, where);
      for (const auto &atom : a.del)
        check_atom(atom, vars, where);
    }
  }

private:
  bool is_constant(const std::string &name) const {
    for (const auto &c : domain_.constants)
      if (c.name == name)
        return true;
    return false;
  }

  const DomainAst &domain_;
};

} // namespace detail

/// Parses a domain in the supported subset (:strips, :typing,
/// :negative-preconditions, :action-costs with constant increments).
inline DomainAst parse_domain(std::string_view text) {
  using detail::fail;
  const sexpr::Node root = sexpr::read_one(text);
  DomainAst domain;
  domain.name = detail::expect_atom(detail::expect_define(root, "domain"),
                                    "domain name");

  for (std::size_t i = 2; i < root.children.size(); ++i) {
    const sexpr::Node &section = root.children[i];
    detail::expect_list(section, "domain section");
    if (section.children.empty() || !section.children[0].is_atom())
      fail(section, "malformed domain section");
    const std::string &key = section.children[0].atom;
    if (key == ":requirements") {
      detail::check_requirements(section, domain.requirements);
    } else if (key == ":types") {
      for (auto &t : detail::parse_typed_list(section, 1)) {
        if (t.name == kRootType)
          continue;
        domain.types[t.name] = t.type;
      }
    } else if (key == ":constants") {
      domain.constants = detail::parse_typed_list(section, 1);
    } else if (key == ":predicates") {
      for (std::size_t k = 1; k < section.children.size(); ++k) {
        const sexpr::Node &p = section.children[k];
        detail::expect_list(p, "predicate declaration");
        if (p.children.empty())
          fail(p, "empty predicate declaration");
        domain.predicates.push_back(
            {detail::expect_atom(p.children[0], "predicate name"),
             detail::parse_typed_list(p, 1)});
      }
    } else if (key == ":functions") {
      for (std::size_t k = 1; k < section.children.size(); ++k) {
        const sexpr::Node &f = section.children[k];
        if (f.is_atom("-") || f.is_atom("number"))
          continue;
        if (!f.has_head("total-cost") || f.children.size() != 1)
          fail(f, "only the (total-cost) function is supported");
      }
    } else if (key == ":action") {
      ActionSchema schema;
      if (section.children.size() < 2)
        fail(section, "action without a name");
      schema.name = detail::expect_atom(section.children[1], "action name");
      bool saw_cost = false;
      for (std::size_t k = 2; k < section.children.size(); k += 2) {
        const sexpr::Node &field = section.children[k];
        const std::string &fkey = detail::expect_atom(field, "action field");
        if (k + 1 >= section.children.size())
          fail(field, "missing value for " + fkey);
        const sexpr::Node &value = section.children[k + 1];
        if (fkey == ":parameters") {
          detail::expect_list(value, "parameter list");
          schema.params = detail::parse_typed_list(value);
        } else if (fkey == ":precondition") {
          detail::parse_literals(value, schema.precondition);
        } else if (fkey == ":effect") {
          detail::parse_effects(value, schema, saw_cost);
        } else {
          fail(field, "unsupported action field " + fkey);
        }
      }
      domain.actions.push_back(std::move(schema));
    } else {
      fail(section, "unsupported domain section " + key);
    }
  }

  for (const auto &[type, parent] : domain.types)
    if (!domain.has_type(parent))
      domain.types[parent] = std::string(kRootType);
  detail::DomainValidator(domain).validate();
  return domain;
}

/// Parses a problem against an already parsed domain.
inline ProblemAst parse_problem(std::string_view text,
                                const DomainAst &domain) {
  using detail::fail;
  const sexpr::Node root = sexpr::read_one(text);
  ProblemAst problem;
  problem.name = detail::expect_atom(detail::expect_define(root, "problem"),
                                     "problem name");
  bool saw_domain = false;
  for (std::size_t i = 2; i < root.children.size(); ++i) {
    const sexpr::Node &section = root.children[i];
    detail::expect_list(section, "problem section");
    if (section.children.empty() || !section.children[0].is_atom())
      fail(section, "malformed problem section");
    const std::string &key = section.children[0].atom;
    if (key == ":domain") {
      if (section.children.size() != 2)
        fail(section, "expected (:domain <name>)");
      problem.domain_name =
          detail::expect_atom(section.children[1], "domain name");
      saw_domain = true;
    } else if (key == ":requirements") {
      std::vector<std::string> ignored;
      detail::check_requirements(section, ignored);
    } else if (key == ":objects") {
      problem.objects = detail::parse_typed_list(section, 1);
    } else if (key == ":init") {
      for (std::size_t k = 1; k < section.children.size(); ++k) {
        const sexpr::Node &item = section.children[k];
        if (item.has_head("=")) // (= (total-cost) 0)
          continue;
        if (item.has_head("not"))
          fail(item, "negative literal in init");
        problem.init.push_back(detail::parse_atom(item));
      }
    } else if (key == ":goal") {
      for (std::size_t k = 1; k < section.children.size(); ++k)
        detail::parse_literals(section.children[k], problem.goal);
    } else if (key == ":metric") {
      continue;
    } else {
      fail(section, "unsupported problem section " + key);
    }
  }
  if (!saw_domain)
    fail(root, "problem lacks a (:domain ...) section");
  if (problem.domain_name != domain.name)
    throw ValidationError("problem refers to domain '" + problem.domain_name +
                          "' but domain is '" + domain.name + "'");

  std::set<std::string> objects;
  for (const auto &c : domain.constants)
    objects.insert(c.name);
  for (const auto &o : problem.objects) {
    if (!domain.has_type(o.type))
      throw ValidationError("object '" + o.name + "' has undeclared type '" +
                            o.type + "'");
    objects.insert(o.name);
  }
  auto check_ground = [&](const Atom &atom, const char *where) {
    const PredicateDecl *decl = domain.find_predicate(atom.predicate);
    if (decl == nullptr)
      throw ValidationError("undeclared predicate '" + atom.predicate +
                            "' in " + where);
    if (decl->params.size() != atom.args.size())
      throw ValidationError("arity mismatch for '" + atom.predicate +
                            "' in " + where);
    for (const auto &arg : atom.args)
      if (objects.count(arg) == 0)
        throw ValidationError("undeclared object '" + arg + "' in " + where);
  };
  for (const auto &atom : problem.init)
    check_ground(atom, "init");
  for (const auto &lit : problem.goal)
    check_ground(lit.atom, "goal");
  return problem;
}

namespace detail {

inline std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

inline std::string typed_list(const std::vector<TypedName> &names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0)
      out += " ";
    out += names[i].name;
    if (i + 1 == names.size() || names[i + 1].type != names[i].type)
      out += " - " + names[i].type;
  }
  return out;
}

} // namespace detail

/// Prints a domain in the supported subset so that parsing the result
/// yields an equal AST.
inline std::string print_domain(const DomainAst &domain) {
  std::string out = "(define (domain " + domain.name + ")\n";
  if (!domain.requirements.empty()) {
    out += "  (:requirements";
    for (const auto &r : domain.requirements)
      out += " " + r;
    out += ")\n";
  }
  if (!domain.types.empty()) {
    out += "  (:types";
    for (const auto &[type, parent] : domain.types)
      out += " " + type + " - " + parent;
    out += ")\n";
  }
  if (!domain.constants.empty())
    out += "  (:constants " + detail::typed_list(domain.constants) + ")\n";
  out += "  (:predicates";
  for (const auto &p : domain.predicates) {
    out += " (" + p.name;
    if (!p.params.empty())
      out += " " + detail::typed_list(p.params);
    out += ")";
  }
  out += ")\n";
  for (const auto &a : domain.actions) {
    out += "  (:action " + a.name + "\n    :parameters (" +
           detail::typed_list(a.params) + ")\n    :precondition (and";
    for (const auto &lit : a.precondition)
      out += " " + to_string(lit);
    out += ")\n    :effect (and";
    for (const auto &atom : a.add)
      out += " " + to_string(atom);
    for (const auto &atom : a.del)
      out += " (not " + to_string(atom) + ")";
    if (a.cost != 1.0)
      out += " (increase (total-cost) " + detail::format_number(a.cost) + ")";
    out += "))\n";
  }
  out += ")\n";
  return out;
}

inline std::string print_problem(const ProblemAst &problem) {
  std::string out = "(define (problem " + problem.name + ")\n  (:domain " +
                    problem.domain_name + ")\n";
  if (!problem.objects.empty())
    out += "  (:objects " + detail::typed_list(problem.objects) + ")\n";
  out += "  (:init";
  for (const auto &atom : problem.init)
    out += " " + to_string(atom);
  out += ")\n  (:goal (and";
  for (const auto &lit : problem.goal)
    out += " " + to_string(lit);
  out += "))\n)\n";
  return out;
}

/// All objects (domain constants and problem objects) whose type is `type`
/// or a subtype, in declaration order without duplicates.
inline std::vector<std::string> objects_of_type(const DomainAst &domain,
                                                const ProblemAst &problem,
                                                std::string_view type) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto visit = [&](const std::vector<TypedName> &names) {
    for (const auto &n : names)
      if (domain.is_subtype(n.type, type) && seen.insert(n.name).second)
        out.push_back(n.name);
  };
  visit(domain.constants);
  visit(problem.objects);
  return out;
}

/// Calls `fn` with every element of the cartesian product of `domains`, in
/// odometer order (last position varies fastest).
template <typename Fn>
void for_each_tuple(const std::vector<std::vector<std::string>> &domains,
                    Fn &&fn) {
  for (const auto &d : domains)
    if (d.empty())
      return;
  std::vector<std::size_t> index(domains.size(), 0);
  std::vector<std::string> tuple(domains.size());
  for (;;) {
    for (std::size_t k = 0; k < domains.size(); ++k)
      tuple[k] = domains[k][index[k]];
    fn(std::as_const(tuple));
    std::size_t k = domains.size();
    while (k > 0 && ++index[k - 1] == domains[k - 1].size()) {
      index[k - 1] = 0;
      --k;
    }
    if (k == 0)
      return;
  }
}

struct CompiledTask {
  DomainAst domain;
  ProblemAst problem;
};

/// Replaces every negated atom over predicate p by a positive atom over a
/// fresh complement predicate "not-p" that is kept in sync by all effects,
/// and closes the initial state so exactly one of p / not-p holds for each
/// ground instance. `extra_goals` lists additional goal literals (e.g.
/// recognition hypotheses) whose negations must also be compiled.
inline CompiledTask
compile_negations(const DomainAst &domain, const ProblemAst &problem,
                  const std::vector<std::vector<Literal>> &extra_goals = {}) {
  std::set<std::string> negated;
  for (const auto &a : domain.actions)
    for (const auto &lit : a.precondition)
      if (lit.negated)
        negated.insert(lit.atom.predicate);
  for (const auto &lit : problem.goal)
    if (lit.negated)
      negated.insert(lit.atom.predicate);
  for (const auto &goal : extra_goals)
    for (const auto &lit : goal)
      if (lit.negated)
        negated.insert(lit.atom.predicate);

  CompiledTask out{domain, problem};
  if (negated.empty())
    return out;

  auto complement = [](const std::string &pred) {
    return std::string(kComplementPrefix) + pred;
  };
  for (const auto &pred : negated) {
    const PredicateDecl *decl = domain.find_predicate(pred);
    if (decl == nullptr)
      throw ValidationError("undeclared predicate '" + pred + "'");
    if (domain.find_predicate(complement(pred)) != nullptr)
      throw ValidationError("complement predicate name '" + complement(pred) +
                            "' already declared");
    out.domain.predicates.push_back({complement(pred), decl->params});
    out.domain.complements[complement(pred)] = pred;
  }

  auto push_unique = [](std::vector<Atom> &list, Atom atom) {
    if (std::find(list.begin(), list.end(), atom) == list.end())
      list.push_back(std::move(atom));
  };
  for (auto &a : out.domain.actions) {
    for (auto &lit : a.precondition) {
      if (lit.negated) {
        lit.atom.predicate = complement(lit.atom.predicate);
        lit.negated = false;
      }
    }
    const std::vector<Atom> adds = a.add;
    const std::vector<Atom> dels = a.del;
    for (const auto &atom : adds)
      if (negated.count(atom.predicate))
        push_unique(a.del, {complement(atom.predicate), atom.args});
    for (const auto &atom : dels)
      if (negated.count(atom.predicate))
        push_unique(a.add, {complement(atom.predicate), atom.args});
  }

  for (auto &lit : out.problem.goal) {
    if (lit.negated) {
      lit.atom.predicate = complement(lit.atom.predicate);
      lit.negated = false;
    }
  }

  // Closed-world completion over the object universe.
  const std::set<Atom> init(problem.init.begin(), problem.init.end());
  for (const auto &pred : negated) {
    const PredicateDecl *decl = domain.find_predicate(pred);
    std::vector<std::vector<std::string>> domains;
    for (const auto &param : decl->params)
      domains.push_back(objects_of_type(domain, problem, param.type));
    for_each_tuple(domains, [&](const std::vector<std::string> &args) {
      if (init.count(Atom{pred, args}) == 0)
        out.problem.init.push_back({complement(pred), args});
    });
  }
  return out;
}

} // namespace fpv::pddl
