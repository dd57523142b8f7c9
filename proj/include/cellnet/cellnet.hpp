#pragma once

#include "rng.hpp"
#include "topology.hpp"
#include "entity.hpp"
#include "notify.hpp"
#include "trails.hpp"
#include "threat.hpp"
#include "metrics.hpp"
#include "engine.hpp"
#include "scenario.hpp"
#include "report_io.hpp"
