#pragma once

// Umbrella header for the pedflow library: a Semi-Lagrangian solver for the
// regularized Hughes pedestrian-flow model (nonlinear Fokker-Planck transport
// coupled to a stationary HJB equation solved by policy iteration).

#include "pedflow/characteristics.hpp"
#include "pedflow/controls.hpp"
#include "pedflow/core.hpp"
#include "pedflow/coupling.hpp"
#include "pedflow/density.hpp"
#include "pedflow/fp_step.hpp"
#include "pedflow/geometry.hpp"
#include "pedflow/grid.hpp"
#include "pedflow/hjb.hpp"
#include "pedflow/interpolate.hpp"
#include "pedflow/io.hpp"
#include "pedflow/oracles.hpp"
#include "pedflow/philox.hpp"
#include "pedflow/scenario.hpp"
