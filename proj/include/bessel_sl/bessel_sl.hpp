#pragma once

#include "core.hpp"
#include "scalar_fss.hpp"
#include "potential.hpp"
#include "problem.hpp"
#include "matrix_fss.hpp"
#include "birkhoff.hpp"
#include "stokes.hpp"
#include "spectral.hpp"
#include "oracle.hpp"
