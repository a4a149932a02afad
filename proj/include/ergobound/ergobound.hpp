#pragma once

#include "ergobound/bounds.hpp"
#include "ergobound/config.hpp"
#include "ergobound/dsequence.hpp"
#include "ergobound/errors.hpp"
#include "ergobound/generator.hpp"
#include "ergobound/kolmogorov.hpp"
#include "ergobound/matrix.hpp"
#include "ergobound/model.hpp"
#include "ergobound/quadrature.hpp"
#include "ergobound/simulate.hpp"
#include "ergobound/time_function.hpp"
