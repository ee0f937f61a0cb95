#pragma once

#include "exitsim/error.hpp"
#include "exitsim/rng.hpp"
#include "exitsim/numeric.hpp"
#include "exitsim/model.hpp"
#include "exitsim/paths.hpp"
#include "exitsim/exit_cdf.hpp"
#include "exitsim/kernel_oracle.hpp"
#include "exitsim/spde_solver.hpp"
#include "exitsim/killed_walk.hpp"
#include "exitsim/mc_frontier.hpp"
#include "exitsim/particle_oracle.hpp"
#include "exitsim/diagnostics.hpp"
#include "exitsim/bounds.hpp"
#include "exitsim/io.hpp"
#include "exitsim/experiments.hpp"
