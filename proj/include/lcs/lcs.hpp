#pragma once

#include "lcs/config.hpp"
#include "lcs/curve.hpp"
#include "lcs/error.hpp"
#include "lcs/flow_map.hpp"
#include "lcs/geometry.hpp"
#include "lcs/interpolation.hpp"
#include "lcs/lcs_tracking.hpp"
#include "lcs/ns_solver.hpp"
#include "lcs/ode.hpp"
#include "lcs/pipeline.hpp"
#include "lcs/seeding.hpp"
#include "lcs/shrinkline.hpp"
#include "lcs/svd.hpp"
#include "lcs/velocity.hpp"
