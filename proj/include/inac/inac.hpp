#pragma once

#include "inac/constants.hpp"
#include "inac/error.hpp"
#include "inac/geometry.hpp"
#include "inac/inac_link.hpp"
#include "inac/observation.hpp"
#include "inac/orbit.hpp"
#include "inac/parallel.hpp"
#include "inac/pnt.hpp"
#include "inac/ris_elos.hpp"
#include "inac/rng.hpp"
#include "inac/scenario.hpp"
#include "inac/time.hpp"
#include "inac/tle.hpp"
#include "inac/walker.hpp"
