#pragma once

#include "mdep/errors.hpp"
#include "mdep/numeric.hpp"
#include "mdep/data_io.hpp"
#include "mdep/autocov.hpp"
#include "mdep/debias.hpp"
#include "mdep/variance.hpp"
#include "mdep/mean_tests.hpp"
#include "mdep/simgen.hpp"
#include "mdep/harness.hpp"
