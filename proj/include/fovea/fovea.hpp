#pragma once

#include "fovea/box.hpp"
#include "fovea/crop_planner.hpp"
#include "fovea/detector.hpp"
#include "fovea/external_backend.hpp"
#include "fovea/frame.hpp"
#include "fovea/fusion.hpp"
#include "fovea/geometry.hpp"
#include "fovea/io.hpp"
#include "fovea/metrics.hpp"
#include "fovea/pipeline.hpp"
#include "fovea/sim.hpp"
