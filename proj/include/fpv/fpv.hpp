#pragma once

// Umbrella header.

#include "fpv/bench.hpp"
#include "fpv/error.hpp"
#include "fpv/fact_prob.hpp"
#include "fpv/grid.hpp"
#include "fpv/ground.hpp"
#include "fpv/pddl.hpp"
#include "fpv/random.hpp"
#include "fpv/recognition.hpp"
#include "fpv/relaxed_graph.hpp"
#include "fpv/report.hpp"
#include "fpv/sexpr.hpp"
#include "fpv/supporters.hpp"
