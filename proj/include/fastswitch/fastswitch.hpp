#pragma once

#include "fastswitch/closure.hpp"
#include "fastswitch/config.hpp"
#include "fastswitch/diagnostics.hpp"
#include "fastswitch/entropy.hpp"
#include "fastswitch/equilibria.hpp"
#include "fastswitch/error.hpp"
#include "fastswitch/fast_flow.hpp"
#include "fastswitch/io.hpp"
#include "fastswitch/linalg.hpp"
#include "fastswitch/micro.hpp"
#include "fastswitch/model.hpp"
#include "fastswitch/ode.hpp"
#include "fastswitch/ode_sim.hpp"
#include "fastswitch/pde_sim.hpp"
#include "fastswitch/presets.hpp"
#include "fastswitch/rate.hpp"
#include "fastswitch/root.hpp"
#include "fastswitch/runner.hpp"
#include "fastswitch/stability.hpp"
