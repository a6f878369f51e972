// spoo.hpp — everything in one include.

#pragma once

#include "spoo/analysis.hpp"
#include "spoo/diagnostics.hpp"
#include "spoo/experiments.hpp"
#include "spoo/filter.hpp"
#include "spoo/gradients.hpp"
#include "spoo/grid.hpp"
#include "spoo/io.hpp"
#include "spoo/optimizer.hpp"
#include "spoo/propagation.hpp"
#include "spoo/pulse.hpp"
#include "spoo/synthesis.hpp"
#include "spoo/system.hpp"
#include "spoo/units.hpp"
