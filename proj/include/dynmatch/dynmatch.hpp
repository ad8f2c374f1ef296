#pragma once

#include "dynmatch/distributions.hpp"
#include "dynmatch/errors.hpp"
#include "dynmatch/extreme_points.hpp"
#include "dynmatch/fluid.hpp"
#include "dynmatch/markov.hpp"
#include "dynmatch/matrix.hpp"
#include "dynmatch/mp_solver.hpp"
#include "dynmatch/network.hpp"
#include "dynmatch/policies.hpp"
#include "dynmatch/priority.hpp"
#include "dynmatch/simulator.hpp"
#include "dynmatch/transport.hpp"
