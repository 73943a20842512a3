#pragma once

// Transfer operators, invariant measures, path-space martingales and wavelet
// filters on four families of finite-to-one dynamical systems.

#include "dynwave/common.hpp"
#include "dynwave/cylinder.hpp"
#include "dynwave/filter_checks.hpp"
#include "dynwave/filters.hpp"
#include "dynwave/io.hpp"
#include "dynwave/json_io.hpp"
#include "dynwave/measure.hpp"
#include "dynwave/multiplicity.hpp"
#include "dynwave/pathspace.hpp"
#include "dynwave/polyroot.hpp"
#include "dynwave/system.hpp"
#include "dynwave/transfer.hpp"
