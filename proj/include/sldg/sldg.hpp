#pragma once

// Umbrella header: the whole library.

#include "sldg/adaptive_control.hpp"
#include "sldg/basis.hpp"
#include "sldg/characteristics.hpp"
#include "sldg/dg_field.hpp"
#include "sldg/diagnostics.hpp"
#include "sldg/errors.hpp"
#include "sldg/grid.hpp"
#include "sldg/ldg_poisson.hpp"
#include "sldg/limiter.hpp"
#include "sldg/linear_solver.hpp"
#include "sldg/problems.hpp"
#include "sldg/quadrature.hpp"
#include "sldg/simulation.hpp"
#include "sldg/sldg_update.hpp"
#include "sldg/upstream_geometry.hpp"
