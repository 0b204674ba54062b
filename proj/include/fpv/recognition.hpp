#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpv/error.hpp"
#include "fpv/fact_prob.hpp"
#include "fpv/ground.hpp"
#include "fpv/relaxed_graph.hpp"

namespace fpv {

/// 0/1 indicator vector of a (relaxed) state over all facts.
struct StateVector {
  std::vector<double> v;
};

/// Observation probability of every fact for one goal.
struct ProbabilityVector {
  std::vector<double> v;
};

inline StateVector map_state(const FactSet &state, std::size_t fact_count) {
  StateVector out{std::vector<double>(fact_count, 0.0)};
  for (FactId f : state) {
    if (f >= fact_count)
      throw UnknownId("unknown fact id " + std::to_string(f));
    out.v[f] = 1.0;
  }
  return out;
}

inline ProbabilityVector map_probs(const FactProbabilityTable &table) {
  return ProbabilityVector{table.p};
}

/// Elementwise product that passes s through where v is zero:
/// (s ⊙ v)_i = s_i * v_i if v_i > 0, else s_i.
inline std::vector<double> odot(std::span<const double> s,
                                std::span<const double> v) {
  if (s.size() != v.size())
    throw LengthMismatch(s.size(), v.size());
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    out[i] = v[i] > 0.0 ? s[i] * v[i] : s[i];
  return out;
}

/// Direction vector from point x to point y, i.e. y - x.
inline std::vector<double> direction(std::span<const double> x,
                                     std::span<const double> y) {
  if (x.size() != y.size())
    throw LengthMismatch(x.size(), y.size());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = y[i] - x[i];
  return out;
}

inline double l2_norm(std::span<const double> x) {
  double sum = 0.0;
  for (double e : x)
    sum += e * e;
  return std::sqrt(sum);
}

/// ‖direction(s ⊙ v, v)‖₂, fused into one pass with the same per-element
/// arithmetic as the composed primitives.
inline double remaining_distance(std::span<const double> s,
                                 std::span<const double> v) {
  if (s.size() != v.size())
    throw LengthMismatch(s.size(), v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double prod = v[i] > 0.0 ? s[i] * v[i] : s[i];
    const double d = v[i] - prod;
    sum += d * d;
  }
  return std::sqrt(sum);
}

struct HeuristicTerms {
  double initial = 0.0; ///< distance still to cover from s0
  double current = 0.0; ///< distance still to cover from s_t
  double value() const { return initial - current; }
};

inline HeuristicTerms heuristic_terms(const StateVector &s0v,
                                      const StateVector &stv,
                                      const ProbabilityVector &pv) {
  if (s0v.v.size() != stv.v.size())
    throw LengthMismatch(s0v.v.size(), stv.v.size());
  return {remaining_distance(s0v.v, pv.v), remaining_distance(stv.v, pv.v)};
}

/// How much of the way from s0 towards the goal (as described by the
/// probability vector) the observed relaxed state has covered. Observed
/// facts with zero probability count against the goal.
inline double heuristic(const StateVector &s0v, const StateVector &stv,
                        const ProbabilityVector &pv) {
  return heuristic_terms(s0v, stv, pv).value();
}

/// A single observation: either an action (its add effects become observed)
/// or a set of directly observed facts.
struct ObservationEvent {
  enum class Kind { Action, State };

  Kind kind = Kind::Action;
  std::optional<ActionId> action;
  std::optional<FactSet> state_facts;

  static ObservationEvent of_action(ActionId a) {
    return {Kind::Action, a, std::nullopt};
  }
  static ObservationEvent of_state(FactSet facts) {
    normalize(facts);
    return {Kind::State, std::nullopt, std::move(facts)};
  }
};

/// Folds one observation into the observed relaxed state. Preconditions of
/// observed actions are not checked: observation sequences may have gaps.
inline RelaxedState progress(const RelaxedState &state,
                             const ObservationEvent &obs,
                             const GroundProblem &problem) {
  const FactSet *added = nullptr;
  if (obs.kind == ObservationEvent::Kind::Action) {
    if (!obs.action)
      throw Error("action observation without an action");
    added = &problem.action(*obs.action).add;
  } else {
    if (!obs.state_facts)
      throw Error("state observation without facts");
    for (FactId f : *obs.state_facts)
      problem.fact(f);
    added = &*obs.state_facts;
  }
  RelaxedState next;
  next.facts.reserve(state.facts.size() + added->size());
  std::set_union(state.facts.begin(), state.facts.end(), added->begin(),
                 added->end(), std::back_inserter(next.facts));
  return next;
}

struct RecognitionResult {
  std::vector<double> heuristic; ///< per goal index
  std::vector<std::size_t> recognized;
  std::size_t t = 0;
};

struct RecognitionStep {
  RecognitionResult result;
  std::int64_t elapsed_ns = 0;
};

struct RecognitionTrace {
  std::vector<RecognitionStep> steps;
};

/// Goals attaining the maximal value, compared with exact equality.
inline std::vector<std::size_t> argmax_all(const std::vector<double> &h) {
  std::vector<std::size_t> best;
  if (h.empty())
    return best;
  double max = h.front();
  for (double x : h)
    if (x > max)
      max = x;
  for (std::size_t g = 0; g < h.size(); ++g)
    if (h[g] == max)
      best.push_back(g);
  return best;
}

/// Incremental recognizer: probability vectors and the s0 term are computed
/// once; each observation costs one progression plus one O(|F|) pass per
/// goal, independent of how many observations came before.
class OnlineRecognizer {
public:
  OnlineRecognizer(const GroundProblem &problem,
                   const std::vector<FactProbabilityTable> &tables)
      : problem_(problem), state_{problem.s0},
        s0v_(map_state(problem.s0, problem.fact_count())),
        stv_(s0v_) {
    if (tables.size() != problem.goals.size())
      throw Error("expected one probability table per goal (" +
                  std::to_string(problem.goals.size()) + "), got " +
                  std::to_string(tables.size()));
    for (const auto &t : tables) {
      if (t.size() != problem.fact_count())
        throw LengthMismatch(t.size(), problem.fact_count());
      pvs_.push_back(map_probs(t));
      initial_.push_back(remaining_distance(s0v_.v, pvs_.back().v));
    }
  }

  /// Scores for the current observed state.
  RecognitionResult current() const {
    RecognitionResult r;
    r.t = t_;
    r.heuristic.reserve(pvs_.size());
    for (std::size_t g = 0; g < pvs_.size(); ++g)
      r.heuristic.push_back(initial_[g] -
                            remaining_distance(stv_.v, pvs_[g].v));
    r.recognized = argmax_all(r.heuristic);
    return r;
  }

  RecognitionResult observe(const ObservationEvent &obs) {
    RelaxedState next = progress(state_, obs, problem_);
    for (FactId f : next.facts)
      stv_.v[f] = 1.0;
    state_ = std::move(next);
    ++t_;
    return current();
  }

  const RelaxedState &state() const noexcept { return state_; }

private:
  const GroundProblem &problem_;
  RelaxedState state_;
  StateVector s0v_;
  StateVector stv_;
  std::vector<ProbabilityVector> pvs_;
  std::vector<double> initial_;
  std::size_t t_ = 0;
};

/// Recognizes the most likely goals after all of `observations`.
inline RecognitionResult
recognize(const GroundProblem &problem,
          const std::vector<FactProbabilityTable> &tables,
          std::span<const ObservationEvent> observations) {
  if (tables.size() != problem.goals.size())
    throw Error("expected one probability table per goal");
  RelaxedState state{problem.s0};
  for (const auto &obs : observations)
    state = progress(state, obs, problem);
  const StateVector s0v = map_state(problem.s0, problem.fact_count());
  const StateVector stv = map_state(state.facts, problem.fact_count());
  RecognitionResult r;
  r.t = observations.size();
  for (const auto &table : tables)
    r.heuristic.push_back(heuristic(s0v, stv, map_probs(table)));
  r.recognized = argmax_all(r.heuristic);
  return r;
}

/// Recognition after every prefix of `observations`. With `timed`, each
/// step records its wall-clock cost; otherwise elapsed_ns stays 0 so the
/// trace is reproducible byte for byte.
inline RecognitionTrace
recognize_online(const GroundProblem &problem,
                 const std::vector<FactProbabilityTable> &tables,
                 std::span<const ObservationEvent> observations,
                 bool timed = false) {
  RecognitionTrace trace;
  trace.steps.reserve(observations.size());
  OnlineRecognizer recognizer(problem, tables);
  for (const auto &obs : observations) {
    RecognitionStep step;
    if (timed) {
      const auto start = std::chrono::steady_clock::now();
      step.result = recognizer.observe(obs);
      step.elapsed_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    } else {
      step.result = recognizer.observe(obs);
    }
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

} // namespace fpv
