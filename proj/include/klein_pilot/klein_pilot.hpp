#pragma once

#include "klein_pilot/accounting.hpp"
#include "klein_pilot/dirac_modes.hpp"
#include "klein_pilot/error.hpp"
#include "klein_pilot/guidance.hpp"
#include "klein_pilot/io.hpp"
#include "klein_pilot/multiscattering.hpp"
#include "klein_pilot/parallel.hpp"
#include "klein_pilot/pipeline.hpp"
#include "klein_pilot/presets.hpp"
#include "klein_pilot/quadrature.hpp"
#include "klein_pilot/scenario.hpp"
#include "klein_pilot/spinor.hpp"
#include "klein_pilot/trajectories.hpp"
#include "klein_pilot/wavepacket.hpp"
