#pragma once

// Umbrella header: gain synthesis, robust string-stability certification and
// time-domain simulation for vehicle platoons with noisy V2V-communicated
// predecessor acceleration.

#include "platoon/core.hpp"
#include "platoon/csv_io.hpp"
#include "platoon/lead_profile.hpp"
#include "platoon/noise_channel.hpp"
#include "platoon/run_config.hpp"
#include "platoon/simulator.hpp"
#include "platoon/stability_analysis.hpp"
#include "platoon/synthesis.hpp"
