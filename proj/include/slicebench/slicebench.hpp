#pragma once

#include "slicebench/common.hpp"
#include "slicebench/compose.hpp"
#include "slicebench/correlation.hpp"
#include "slicebench/haar.hpp"
#include "slicebench/io.hpp"
#include "slicebench/parallel.hpp"
#include "slicebench/propagator.hpp"
#include "slicebench/quadrature.hpp"
#include "slicebench/scenario.hpp"
#include "slicebench/slicespace.hpp"
#include "slicebench/transfer.hpp"
