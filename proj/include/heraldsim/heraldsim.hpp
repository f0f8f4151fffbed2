#pragma once

#include "heraldsim/analytic.hpp"
#include "heraldsim/config.hpp"
#include "heraldsim/detstate.hpp"
#include "heraldsim/errors.hpp"
#include "heraldsim/mc_oracle.hpp"
#include "heraldsim/minimize.hpp"
#include "heraldsim/optsweep.hpp"
#include "heraldsim/result_table.hpp"
#include "heraldsim/types.hpp"
