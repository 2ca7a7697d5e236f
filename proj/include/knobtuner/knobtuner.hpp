#pragma once

#include "knobtuner/adaptive_sampler.hpp"
#include "knobtuner/analysis.hpp"
#include "knobtuner/cost_model.hpp"
#include "knobtuner/design_space.hpp"
#include "knobtuner/driver.hpp"
#include "knobtuner/errors.hpp"
#include "knobtuner/measurement.hpp"
#include "knobtuner/metrics.hpp"
#include "knobtuner/network.hpp"
#include "knobtuner/random.hpp"
#include "knobtuner/rl_agent.hpp"
#include "knobtuner/sa_search.hpp"
#include "knobtuner/subprocess.hpp"
#include "knobtuner/task_io.hpp"
