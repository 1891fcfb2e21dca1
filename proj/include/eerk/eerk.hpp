#pragma once

#include "eerk/boundary_data.hpp"
#include "eerk/harness.hpp"
#include "eerk/jet.hpp"
#include "eerk/krylov.hpp"
#include "eerk/linear_operator.hpp"
#include "eerk/phi.hpp"
#include "eerk/problems.hpp"
#include "eerk/rational.hpp"
#include "eerk/space_disc.hpp"
#include "eerk/stepper.hpp"
#include "eerk/tableau.hpp"
