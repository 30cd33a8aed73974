#pragma once

#include "uwbadapt/error.hpp"
#include "uwbadapt/rng.hpp"
#include "uwbadapt/phy_actions.hpp"
#include "uwbadapt/energy_model.hpp"
#include "uwbadapt/link_state.hpp"
#include "uwbadapt/dataset.hpp"
#include "uwbadapt/synthetic.hpp"
#include "uwbadapt/environment.hpp"
#include "uwbadapt/feature_select.hpp"
#include "uwbadapt/q_agent.hpp"
#include "uwbadapt/nn.hpp"
#include "uwbadapt/replay.hpp"
#include "uwbadapt/dqn_agent.hpp"
#include "uwbadapt/eval.hpp"
