#pragma once

#include "fradiff/analysis.hpp"
#include "fradiff/caputo.hpp"
#include "fradiff/config.hpp"
#include "fradiff/errors.hpp"
#include "fradiff/grid.hpp"
#include "fradiff/operator_spec.hpp"
#include "fradiff/operators.hpp"
#include "fradiff/scenario.hpp"
#include "fradiff/special_fn.hpp"
#include "fradiff/stepper.hpp"
