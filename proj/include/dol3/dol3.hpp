#pragma once

// Umbrella header.

#include "dol3/baselines.hpp"
#include "dol3/cli.hpp"
#include "dol3/config.hpp"
#include "dol3/engine.hpp"
#include "dol3/error.hpp"
#include "dol3/graph.hpp"
#include "dol3/marketplace.hpp"
#include "dol3/metrics.hpp"
#include "dol3/network.hpp"
#include "dol3/random.hpp"
#include "dol3/replay.hpp"
#include "dol3/trust.hpp"
