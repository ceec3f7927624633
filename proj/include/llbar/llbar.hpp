#pragma once

// Everything except the CLI drivers.
#include "llbar/calibration.hpp"
#include "llbar/diagnostics.hpp"
#include "llbar/error.hpp"
#include "llbar/experiments.hpp"
#include "llbar/field.hpp"
#include "llbar/grid.hpp"
#include "llbar/initial_data.hpp"
#include "llbar/integrator.hpp"
#include "llbar/mollifier.hpp"
#include "llbar/physics.hpp"
#include "llbar/snapshot.hpp"
#include "llbar/spectral.hpp"
#include "llbar/stats.hpp"
