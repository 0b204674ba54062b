#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fpv/error.hpp"
#include "fpv/pddl.hpp"

namespace fpv {

using FactId = std::uint32_t;
using ActionId = std::uint32_t;

/// Sorted, duplicate-free list of fact ids.
using FactSet = std::vector<FactId>;

inline void normalize(FactSet &set) {
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
}

inline bool contains(const FactSet &set, FactId f) {
  return std::binary_search(set.begin(), set.end(), f);
}

struct GroundFact {
  FactId id = 0;
  std::string name;
};

struct GroundAction {
  ActionId id = 0;
  std::string name;
  FactSet pre;
  FactSet add;
  FactSet del;
  double cost = 1.0;
};

/// A fully grounded STRIPS task with one or more candidate goals. Facts and
/// actions are indexed densely in lexicographic order of their canonical
/// names.
struct GroundProblem {
  std::vector<GroundFact> facts;
  std::vector<GroundAction> actions;
  FactSet s0;
  std::vector<FactSet> goals;
  /// Canonical text of each goal description, aligned with `goals`.
  std::vector<std::string> goal_names;

  std::size_t fact_count() const noexcept { return facts.size(); }
  std::size_t action_count() const noexcept { return actions.size(); }

  std::optional<FactId> find_fact(std::string_view name) const {
    auto it = fact_index_.find(std::string(name));
    if (it == fact_index_.end())
      return std::nullopt;
    return it->second;
  }

  std::optional<ActionId> find_action(std::string_view name) const {
    auto it = action_index_.find(std::string(name));
    if (it == action_index_.end())
      return std::nullopt;
    return it->second;
  }

  const GroundFact &fact(FactId id) const {
    if (id >= facts.size())
      throw UnknownId("unknown fact id " + std::to_string(id));
    return facts[id];
  }

  const GroundAction &action(ActionId id) const {
    if (id >= actions.size())
      throw UnknownId("unknown action id " + std::to_string(id));
    return actions[id];
  }

  void rebuild_index() {
    fact_index_.clear();
    action_index_.clear();
    for (const auto &f : facts)
      fact_index_.emplace(f.name, f.id);
    for (const auto &a : actions)
      action_index_.emplace(a.name, a.id);
  }

private:
  std::unordered_map<std::string, FactId> fact_index_;
  std::unordered_map<std::string, ActionId> action_index_;
};

/// Canonical "(name arg1 ... argk)" form used for facts, actions and
/// hypothesis atoms.
inline std::string canonical_name(std::string_view head,
                                  const std::vector<std::string> &args) {
  std::string out = "(";
  out += head;
  for (const auto &a : args) {
    out += ' ';
    out += a;
  }
  out += ')';
  return out;
}

namespace detail {

/// Static (never added or deleted) atoms of the initial state, indexed for
/// candidate lookup during schema instantiation.
class StaticIndex {
public:
  void insert(const pddl::Atom &atom) {
    auto &rows = tuples_[atom.predicate];
    const std::size_t row = rows.size();
    rows.push_back(atom.args);
    for (std::size_t pos = 0; pos < atom.args.size(); ++pos)
      postings_[key(atom.predicate, pos, atom.args[pos])].push_back(row);
    members_.insert(canonical_name(atom.predicate, atom.args));
  }

  bool holds(const std::string &pred,
             const std::vector<std::string> &args) const {
    return members_.count(canonical_name(pred, args)) > 0;
  }

  /// Values that can fill position `slot` of `pred` given the already bound
  /// positions (`bound[i]` empty means unbound).
  std::set<std::string> candidates(const std::string &pred, std::size_t slot,
                                   const std::vector<std::string> &bound) const {
    std::set<std::string> out;
    auto rows_it = tuples_.find(pred);
    if (rows_it == tuples_.end())
      return out;
    const auto &rows = rows_it->second;
    const std::vector<std::size_t> *shortest = nullptr;
    for (std::size_t pos = 0; pos < bound.size(); ++pos) {
      if (pos == slot || bound[pos].empty())
        continue;
      auto it = postings_.find(key(pred, pos, bound[pos]));
      if (it == postings_.end())
        return out;
      if (shortest == nullptr || it->second.size() < shortest->size())
        shortest = &it->second;
    }
    auto consider = [&](std::size_t row) {
      const auto &tuple = rows[row];
      for (std::size_t pos = 0; pos < bound.size(); ++pos)
        if (pos != slot && !bound[pos].empty() && tuple[pos] != bound[pos])
          return;
      out.insert(tuple[slot]);
    };
    if (shortest != nullptr) {
      for (std::size_t row : *shortest)
        consider(row);
    } else {
      for (std::size_t row = 0; row < rows.size(); ++row)
        consider(row);
    }
    return out;
  }

private:
  static std::string key(const std::string &pred, std::size_t pos,
                         const std::string &value) {
    return pred + '\x1f' + std::to_string(pos) + '\x1f' + value;
  }

  std::unordered_map<std::string, std::vector<std::vector<std::string>>>
      tuples_;
  std::unordered_map<std::string, std::vector<std::size_t>> postings_;
  std::unordered_set<std::string> members_;
};

struct RawAction {
  std::string name;
  std::vector<std::string> pre, add, del;
  double cost = 1.0;
};

inline std::vector<std::string>
substitute(const pddl::Atom &atom,
           const std::map<std::string, std::string> &binding) {
  std::vector<std::string> args;
  args.reserve(atom.args.size());
  for (const auto &term : atom.args) {
    if (pddl::is_variable(term)) {
      auto it = binding.find(term);
      args.push_back(it == binding.end() ? std::string() : it->second);
    } else {
      args.push_back(term);
    }
  }
  return args;
}

class SchemaGrounder {
public:
  SchemaGrounder(const pddl::DomainAst &domain, const pddl::ProblemAst &problem,
                 const std::set<std::string> &static_preds,
                 const StaticIndex &statics)
      : domain_(domain), problem_(problem), static_preds_(static_preds),
        statics_(statics) {}

  void ground(const pddl::ActionSchema &schema, std::vector<RawAction> &out) {
    schema_ = &schema;
    out_ = &out;
    binding_.clear();
    for (const auto &lit : schema.precondition) {
      if (!static_preds_.count(lit.atom.predicate))
        continue;
      const bool has_var =
          std::any_of(lit.atom.args.begin(), lit.atom.args.end(),
                      [](const auto &t) { return pddl::is_variable(t); });
      if (!has_var && !statics_.holds(lit.atom.predicate, lit.atom.args))
        return;
    }
    extend(0);
  }

private:
  void extend(std::size_t depth) {
    const auto &params = schema_->params;
    if (depth == params.size()) {
      emit();
      return;
    }
    const std::string &var = params[depth].name;
    std::optional<std::set<std::string>> allowed;
    for (const auto &lit : schema_->precondition) {
      if (!static_preds_.count(lit.atom.predicate))
        continue;
      const auto bound = substitute(lit.atom, binding_);
      for (std::size_t slot = 0; slot < lit.atom.args.size(); ++slot) {
        if (lit.atom.args[slot] != var)
          continue;
        // Only filter once every other variable of the atom is bound, so
        // the atom is fully checked exactly when its last variable binds.
        bool others_bound = true;
        for (std::size_t pos = 0; pos < bound.size(); ++pos)
          if (pos != slot && lit.atom.args[pos] != var && bound[pos].empty())
            others_bound = false;
        if (!others_bound)
          continue;
        std::set<std::string> found;
        std::vector<std::string> pattern = bound;
        for (std::size_t pos = 0; pos < pattern.size(); ++pos)
          if (lit.atom.args[pos] == var)
            pattern[pos].clear();
        for (const auto &value :
             statics_.candidates(lit.atom.predicate, slot, pattern)) {
          std::vector<std::string> full = pattern;
          for (std::size_t pos = 0; pos < full.size(); ++pos)
            if (lit.atom.args[pos] == var)
              full[pos] = value;
          if (statics_.holds(lit.atom.predicate, full))
            found.insert(value);
        }
        if (!allowed) {
          allowed = std::move(found);
        } else {
          std::set<std::string> both;
          std::set_intersection(allowed->begin(), allowed->end(),
                                found.begin(), found.end(),
                                std::inserter(both, both.end()));
          allowed = std::move(both);
        }
        break;
      }
    }
    for (const auto &obj :
         pddl::objects_of_type(domain_, problem_, params[depth].type)) {
      if (allowed && allowed->count(obj) == 0)
        continue;
      binding_[var] = obj;
      extend(depth + 1);
    }
    binding_.erase(var);
  }

  void emit() {
    RawAction action;
    std::vector<std::string> args;
    for (const auto &p : schema_->params)
      args.push_back(binding_.at(p.name));
    action.name = canonical_name(schema_->name, args);
    action.cost = schema_->cost;
    for (const auto &lit : schema_->precondition) {
      if (static_preds_.count(lit.atom.predicate))
        continue;
      action.pre.push_back(
          canonical_name(lit.atom.predicate, substitute(lit.atom, binding_)));
    }
    for (const auto &atom : schema_->add)
      action.add.push_back(
          canonical_name(atom.predicate, substitute(atom, binding_)));
    for (const auto &atom : schema_->del)
      action.del.push_back(
          canonical_name(atom.predicate, substitute(atom, binding_)));
    out_->push_back(std::move(action));
  }

  const pddl::DomainAst &domain_;
  const pddl::ProblemAst &problem_;
  const std::set<std::string> &static_preds_;
  const StaticIndex &statics_;
  const pddl::ActionSchema *schema_ = nullptr;
  std::vector<RawAction> *out_ = nullptr;
  std::map<std::string, std::string> binding_;
};

} // namespace detail

/// Grounds a negation-free task. Every type-consistent instantiation of the
/// fluent predicates becomes a fact. Predicates that no schema adds or
/// deletes are static: they are evaluated against the initial state and do
/// not appear as facts. Each entry of `hypotheses` becomes one goal; when
/// empty, the problem's own goal is used.
inline GroundProblem
ground(const pddl::DomainAst &domain, const pddl::ProblemAst &problem,
       const std::vector<std::vector<pddl::Literal>> &hypotheses = {}) {
  for (const auto &schema : domain.actions)
    for (const auto &lit : schema.precondition)
      if (lit.negated)
        throw GroundingError("negative precondition in '" + schema.name +
                             "': compile negations before grounding");

  std::set<std::string> fluent;
  for (const auto &schema : domain.actions) {
    for (const auto &atom : schema.add)
      fluent.insert(atom.predicate);
    for (const auto &atom : schema.del)
      fluent.insert(atom.predicate);
  }
  std::set<std::string> static_preds;
  for (const auto &p : domain.predicates)
    if (!fluent.count(p.name))
      static_preds.insert(p.name);

  detail::StaticIndex statics;
  for (const auto &atom : problem.init)
    if (static_preds.count(atom.predicate))
      statics.insert(atom);

  std::vector<std::string> fact_names;
  for (const auto &p : domain.predicates) {
    if (static_preds.count(p.name))
      continue;
    std::vector<std::vector<std::string>> domains;
    for (const auto &param : p.params)
      domains.push_back(pddl::objects_of_type(domain, problem, param.type));
    pddl::for_each_tuple(domains, [&](const std::vector<std::string> &args) {
      fact_names.push_back(canonical_name(p.name, args));
    });
  }
  std::sort(fact_names.begin(), fact_names.end());
  fact_names.erase(std::unique(fact_names.begin(), fact_names.end()),
                   fact_names.end());

  GroundProblem out;
  out.facts.reserve(fact_names.size());
  std::unordered_map<std::string, FactId> ids;
  for (const auto &name : fact_names) {
    const auto id = static_cast<FactId>(out.facts.size());
    ids.emplace(name, id);
    out.facts.push_back({id, name});
  }

  for (const auto &atom : problem.init) {
    if (static_preds.count(atom.predicate))
      continue;
    const std::string name = canonical_name(atom.predicate, atom.args);
    auto it = ids.find(name);
    if (it == ids.end())
      throw GroundingError("initial atom " + name + " is not type-consistent");
    out.s0.push_back(it->second);
  }
  normalize(out.s0);

  std::vector<detail::RawAction> raw;
  detail::SchemaGrounder grounder(domain, problem, static_preds, statics);
  for (const auto &schema : domain.actions)
    grounder.ground(schema, raw);
  std::sort(raw.begin(), raw.end(),
            [](const auto &a, const auto &b) { return a.name < b.name; });

  for (auto &r : raw) {
    GroundAction action;
    action.name = std::move(r.name);
    action.cost = r.cost;
    bool applicable = true;
    for (const auto &name : r.pre) {
      auto it = ids.find(name);
      if (it == ids.end()) {
        applicable = false; // precondition outside the typed fact universe
        break;
      }
      action.pre.push_back(it->second);
    }
    if (!applicable)
      continue;
    auto map_effects = [&](const std::vector<std::string> &names,
                           FactSet &target) {
      for (const auto &name : names) {
        auto it = ids.find(name);
        if (it == ids.end())
          throw GroundingError("effect " + name + " of " + action.name +
                               " is not type-consistent");
        target.push_back(it->second);
      }
    };
    map_effects(r.add, action.add);
    map_effects(r.del, action.del);
    normalize(action.pre);
    normalize(action.add);
    normalize(action.del);
    FactSet del;
    std::set_difference(action.del.begin(), action.del.end(),
                        action.add.begin(), action.add.end(),
                        std::back_inserter(del));
    action.del = std::move(del);
    action.id = static_cast<ActionId>(out.actions.size());
    out.actions.push_back(std::move(action));
  }

  std::map<std::string, std::string> original_of = domain.complements;
  std::map<std::string, std::string> complement_of;
  for (const auto &[comp, orig] : original_of)
    complement_of[orig] = comp;

  auto map_goal = [&](const std::vector<pddl::Literal> &literals) {
    FactSet goal;
    std::vector<std::string> parts;
    for (const auto &lit : literals) {
      std::string pred = lit.atom.predicate;
      if (lit.negated) {
        auto it = complement_of.find(pred);
        if (it == complement_of.end())
          throw GroundingError("hypothesis literal " + pddl::to_string(lit) +
                               " is not groundable: negation not compiled");
        pred = it->second;
      }
      const std::string name = canonical_name(pred, lit.atom.args);
      parts.push_back(pddl::to_string(lit));
      if (static_preds.count(pred)) {
        if (statics.holds(pred, lit.atom.args))
          continue;
        throw GroundingError("hypothesis literal " + pddl::to_string(lit) +
                             " is not groundable: static and false");
      }
      auto it = ids.find(name);
      if (it == ids.end())
        throw GroundingError("hypothesis literal " + pddl::to_string(lit) +
                             " is not groundable");
      goal.push_back(it->second);
    }
    normalize(goal);
    std::string text;
    for (std::size_t i = 0; i < parts.size(); ++i)
      text += (i ? ", " : "") + parts[i];
    out.goals.push_back(std::move(goal));
    out.goal_names.push_back(std::move(text));
  };
  if (hypotheses.empty()) {
    map_goal(problem.goal);
  } else {
    for (const auto &h : hypotheses)
      map_goal(h);
  }
  out.rebuild_index();
  return out;
}

} // namespace fpv
