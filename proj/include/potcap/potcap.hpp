#pragma once

#define POTCAP_VERSION "0.1.0"

#include "asymptotics.hpp"
#include "axioms.hpp"
#include "capacity.hpp"
#include "conformal.hpp"
#include "errors.hpp"
#include "fixtures.hpp"
#include "geometry.hpp"
#include "kernel.hpp"
#include "measure.hpp"
#include "potential.hpp"
#include "sampling.hpp"
#include "thinness.hpp"
