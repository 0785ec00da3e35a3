#pragma once

#include "levyesc/errors.hpp"
#include "levyesc/grid_function.hpp"
#include "levyesc/montecarlo.hpp"
#include "levyesc/problem.hpp"
#include "levyesc/problem_io.hpp"
#include "levyesc/regular.hpp"
#include "levyesc/singular.hpp"
#include "levyesc/solver.hpp"
#include "levyesc/stable.hpp"
