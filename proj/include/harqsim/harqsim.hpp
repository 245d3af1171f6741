#pragma once

// Umbrella header: the whole library in one include.

#include "harqsim/channel.hpp"
#include "harqsim/cli.hpp"
#include "harqsim/controller.hpp"
#include "harqsim/engine.hpp"
#include "harqsim/harq.hpp"
#include "harqsim/metrics.hpp"
#include "harqsim/rng.hpp"
#include "harqsim/scenario.hpp"
#include "harqsim/strategy.hpp"
#include "harqsim/traffic.hpp"
