#pragma once

#include "cctb/ad_tables_io.hpp"
#include "cctb/calibration.hpp"
#include "cctb/campaign.hpp"
#include "cctb/config.hpp"
#include "cctb/errors.hpp"
#include "cctb/generator.hpp"
#include "cctb/kinematics.hpp"
#include "cctb/oracle.hpp"
#include "cctb/policies.hpp"
#include "cctb/scoring.hpp"
#include "cctb/simulator.hpp"
#include "cctb/toml.hpp"
#include "cctb/trace_io.hpp"
#include "cctb/verdict.hpp"
#include "cctb/world.hpp"
