#pragma once

#include "perc/lattice.hpp"
#include "perc/sampling.hpp"
#include "perc/connectivity.hpp"
#include "perc/exploration.hpp"
#include "perc/montecarlo.hpp"
#include "perc/cardy.hpp"
#include "perc/loewner.hpp"
#include "perc/estimators.hpp"
#include "perc/config.hpp"
#include "perc/output.hpp"
#include "perc/cli.hpp"
