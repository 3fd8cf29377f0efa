#pragma once

#include "superexp/csv.hpp"
#include "superexp/drift_shift.hpp"
#include "superexp/estimate.hpp"
#include "superexp/exponent.hpp"
#include "superexp/expr.hpp"
#include "superexp/identities.hpp"
#include "superexp/path.hpp"
#include "superexp/rng.hpp"
#include "superexp/version.hpp"
