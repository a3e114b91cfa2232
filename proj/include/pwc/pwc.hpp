#pragma once

#include "pwc/types.hpp"
#include "pwc/operation.hpp"
#include "pwc/core_model.hpp"
#include "pwc/ordering.hpp"
#include "pwc/primary_mgmt.hpp"
#include "pwc/instance_engine.hpp"
#include "pwc/waitfree_scheduler.hpp"
#include "pwc/client_manager.hpp"
#include "pwc/sim_harness.hpp"
#include "pwc/scenario_io.hpp"
#include "pwc/report.hpp"
#include "pwc/verify.hpp"
