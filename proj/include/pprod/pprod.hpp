#pragma once

#include "pprod/error.hpp"
#include "pprod/random.hpp"
#include "pprod/hilbert.hpp"
#include "pprod/geometry.hpp"
#include "pprod/schedules.hpp"
#include "pprod/iteration.hpp"
#include "pprod/experiments.hpp"
