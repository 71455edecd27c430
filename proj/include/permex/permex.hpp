#pragma once

#include "permex/asymptotics.hpp"
#include "permex/core_model.hpp"
#include "permex/errors.hpp"
#include "permex/exact_moments.hpp"
#include "permex/montecarlo.hpp"
#include "permex/numeric.hpp"
#include "permex/permanent.hpp"
#include "permex/report.hpp"
