#pragma once

#include "nlcm/constants.hpp"
#include "nlcm/dual.hpp"
#include "nlcm/errors.hpp"
#include "nlcm/families.hpp"
#include "nlcm/integrate.hpp"
#include "nlcm/jet.hpp"
#include "nlcm/lagrangian.hpp"
#include "nlcm/potential.hpp"
#include "nlcm/quadrature.hpp"
#include "nlcm/stencil.hpp"
#include "nlcm/systems.hpp"
#include "nlcm/trajectory.hpp"
