#pragma once

#include "bbm_mc.hpp"
#include "drift_schedule.hpp"
#include "oscillator.hpp"
#include "pde_physical.hpp"
#include "rate_fit.hpp"
#include "specfun.hpp"
#include "theorem.hpp"
