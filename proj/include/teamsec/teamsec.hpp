#pragma once

#include "teamsec/game_model.hpp"
#include "teamsec/equilibrium_solvers.hpp"
#include "teamsec/closed_form.hpp"
#include "teamsec/stackelberg.hpp"
#include "teamsec/oracle.hpp"
#include "teamsec/experiments.hpp"
