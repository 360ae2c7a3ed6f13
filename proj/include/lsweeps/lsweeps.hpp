// Umbrella header for the L-sweeps Helmholtz solver library.

#pragma once

#include "lsweeps/assemble.hpp"
#include "lsweeps/cdd.hpp"
#include "lsweeps/core.hpp"
#include "lsweeps/experiment.hpp"
#include "lsweeps/grid.hpp"
#include "lsweeps/io.hpp"
#include "lsweeps/krylov.hpp"
#include "lsweeps/models.hpp"
#include "lsweeps/runtime.hpp"
#include "lsweeps/sparse_direct.hpp"
#include "lsweeps/sweeps.hpp"
#include "lsweeps/traces.hpp"
