#pragma once

#include "modlattice/controller.hpp"
#include "modlattice/harness.hpp"
#include "modlattice/json_io.hpp"
#include "modlattice/lattice.hpp"
#include "modlattice/sim.hpp"
#include "modlattice/sysid.hpp"
#include "modlattice/trajectory.hpp"
#include "modlattice/undock_guard.hpp"
#include "modlattice/waveform.hpp"
