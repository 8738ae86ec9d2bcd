#pragma once

#include "isospec/error.hpp"
#include "isospec/surface.hpp"
#include "isospec/expression.hpp"
#include "isospec/assembly.hpp"
#include "isospec/eigensolve.hpp"
#include "isospec/perturb.hpp"
#include "isospec/fields.hpp"
#include "isospec/experiments.hpp"
#include "isospec/io.hpp"
