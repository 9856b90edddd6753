#pragma once

#include "tvlam/diffops.hpp"
#include "tvlam/grid.hpp"
#include "tvlam/io.hpp"
#include "tvlam/lambdamax.hpp"
#include "tvlam/spectral.hpp"
#include "tvlam/tvsolve.hpp"
