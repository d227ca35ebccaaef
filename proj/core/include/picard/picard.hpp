#pragma once

#include "picard/convergence.hpp"
#include "picard/error.hpp"
#include "picard/euler.hpp"
#include "picard/filter.hpp"
#include "picard/grid.hpp"
#include "picard/matrix.hpp"
#include "picard/model.hpp"
#include "picard/noise.hpp"
#include "picard/oracles.hpp"
#include "picard/parallel.hpp"
#include "picard/rng.hpp"
#include "picard/test_function.hpp"
#include "picard/weights.hpp"
