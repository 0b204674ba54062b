#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fpv/error.hpp"
#include "fpv/random.hpp"

namespace fpv::grid {

/// A 4-connected grid world. Cells are numbered row-major from 1 starting
/// at the top-left corner and named "c<k>".
struct GridSpec {
  std::size_t width = 5;
  std::size_t height = 5;
  std::set<std::size_t> blocked; ///< 1-based cell numbers
  std::size_t start = 1;
  std::vector<std::size_t> goals;
  std::size_t true_goal = 0; ///< index into goals
};

inline std::string cell_name(std::size_t cell) {
  return "c" + std::to_string(cell);
}

inline std::size_t cell_count(const GridSpec &spec) {
  return spec.width * spec.height;
}

/// Open cells 4-adjacent to `cell`.
inline std::vector<std::size_t> neighbours(const GridSpec &spec,
                                           std::size_t cell) {
  std::vector<std::size_t> out;
  if (spec.blocked.count(cell))
    return out;
  const std::size_t i = cell - 1;
  const std::size_t row = i / spec.width, col = i % spec.width;
  auto push = [&](std::size_t r, std::size_t c) {
    const std::size_t n = r * spec.width + c + 1;
    if (!spec.blocked.count(n))
      out.push_back(n);
  };
  if (row > 0)
    push(row - 1, col);
  if (col > 0)
    push(row, col - 1);
  if (col + 1 < spec.width)
    push(row, col + 1);
  if (row + 1 < spec.height)
    push(row + 1, col);
  std::sort(out.begin(), out.end());
  return out;
}

/// BFS distances from `from`; unreachable cells get nullopt. Index 0 unused.
inline std::vector<std::optional<std::size_t>>
distances(const GridSpec &spec, std::size_t from) {
  std::vector<std::optional<std::size_t>> dist(cell_count(spec) + 1);
  std::deque<std::size_t> queue{from};
  dist[from] = 0;
  while (!queue.empty()) {
    const std::size_t c = queue.front();
    queue.pop_front();
    for (std::size_t n : neighbours(spec, c)) {
      if (!dist[n]) {
        dist[n] = *dist[c] + 1;
        queue.push_back(n);
      }
    }
  }
  return dist;
}

/// A uniformly tie-broken shortest path from `from` to `to` as a list of
/// cells (both endpoints included).
inline std::vector<std::size_t> shortest_path(const GridSpec &spec,
                                              std::size_t from, std::size_t to,
                                              std::uint64_t seed) {
  const auto to_goal = distances(spec, to);
  if (!to_goal[from])
    throw Error("no path from " + cell_name(from) + " to " + cell_name(to));
  Rng rng(seed);
  std::vector<std::size_t> path{from};
  std::size_t at = from;
  while (at != to) {
    std::vector<std::size_t> options;
    for (std::size_t n : neighbours(spec, at))
      if (to_goal[n] && *to_goal[n] + 1 == *to_goal[at])
        options.push_back(n);
    at = options[rng.index(options.size())];
    path.push_back(at);
  }
  return path;
}

inline std::string domain_pddl() {
  return R"((define (domain grid)
  (:requirements :strips :typing)
  (:types cell)
  (:predicates (is-at ?x - cell) (adj ?x ?y - cell))
  (:action m
    :parameters (?x ?y - cell)
    :precondition (and (is-at ?x) (adj ?x ?y))
    :effect (and (is-at ?y) (not (is-at ?x))))
)
)";
}

/// Problem template with the goal left as the "<HYPOTHESIS>" placeholder.
inline std::string template_pddl(const GridSpec &spec) {
  std::string out = "(define (problem grid-" + std::to_string(spec.width) +
                    "x" + std::to_string(spec.height) +
                    ")\n  (:domain grid)\n  (:objects";
  for (std::size_t c = 1; c <= cell_count(spec); ++c)
    out += " " + cell_name(c);
  out += " - cell)\n  (:init (is-at " + cell_name(spec.start) + ")";
  for (std::size_t c = 1; c <= cell_count(spec); ++c)
    for (std::size_t n : neighbours(spec, c))
      out += "\n    (adj " + cell_name(c) + " " + cell_name(n) + ")";
  out += ")\n  (:goal (and <HYPOTHESIS>))\n)\n";
  return out;
}

inline std::string hypothesis_line(std::size_t cell) {
  return "(is-at " + cell_name(cell) + ")";
}

/// Move observations along a shortest path to the true goal.
inline std::vector<std::string> observation_lines(const GridSpec &spec,
                                                  std::uint64_t seed) {
  const auto path =
      shortest_path(spec, spec.start, spec.goals.at(spec.true_goal), seed);
  std::vector<std::string> lines;
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    lines.push_back("(m " + cell_name(path[i]) + " " + cell_name(path[i + 1]) +
                    ")");
  return lines;
}

/// The 5x5 example world: agent in c23, goals c1 and c5, two columns of
/// walls so that each goal has exactly two optimal routes.
inline GridSpec example_world() {
  GridSpec spec;
  spec.width = 5;
  spec.height = 5;
  spec.blocked = {7, 9, 12, 14, 17, 19};
  spec.start = 23;
  spec.goals = {1, 5};
  spec.true_goal = 0;
  return spec;
}

} // namespace fpv::grid
