#pragma once

// Umbrella header.

#include "algebra.hpp"
#include "analysis.hpp"
#include "evolution.hpp"
#include "exponential.hpp"
#include "identities.hpp"
#include "ode.hpp"
#include "random.hpp"
#include "scenario.hpp"
#include "state_space.hpp"
#include "stationary.hpp"
