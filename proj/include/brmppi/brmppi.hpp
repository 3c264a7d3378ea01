#pragma once

#include "brmppi/types.hpp"
#include "brmppi/dual.hpp"
#include "brmppi/dynamics.hpp"
#include "brmppi/reference_path.hpp"
#include "brmppi/barriers.hpp"
#include "brmppi/projection.hpp"
#include "brmppi/costs.hpp"
#include "brmppi/hitch_filter.hpp"
#include "brmppi/parallel.hpp"
#include "brmppi/mppi.hpp"
#include "brmppi/controller.hpp"
#include "brmppi/clearance.hpp"
#include "brmppi/json_fields.hpp"
#include "brmppi/scenario.hpp"
#include "brmppi/episode.hpp"
#include "brmppi/config.hpp"
