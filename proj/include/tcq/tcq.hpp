// Umbrella header for the tcq library.
#pragma once

#include "tcq/bench.hpp"
#include "tcq/combinatorics.hpp"
#include "tcq/coupling.hpp"
#include "tcq/domain.hpp"
#include "tcq/fit.hpp"
#include "tcq/io.hpp"
#include "tcq/observables.hpp"
#include "tcq/regimes.hpp"
#include "tcq/robustness.hpp"
#include "tcq/spectra.hpp"
#include "tcq/summation.hpp"
#include "tcq/thermo.hpp"
#include "tcq/units.hpp"
