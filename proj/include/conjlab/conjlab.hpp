#pragma once

// Umbrella header.

#include "conjlab/builtins.hpp"
#include "conjlab/conjugacy.hpp"
#include "conjlab/errors.hpp"
#include "conjlab/golden.hpp"
#include "conjlab/linear_flow.hpp"
#include "conjlab/moduli.hpp"
#include "conjlab/nonlinear_flow.hpp"
#include "conjlab/ode.hpp"
#include "conjlab/regularity.hpp"
#include "conjlab/report.hpp"
#include "conjlab/scenario.hpp"
#include "conjlab/stability.hpp"
#include "conjlab/suites.hpp"
#include "conjlab/types.hpp"
