#pragma once

// Everything: model, loop space, action, bounds, torus, solver, verification and record I/O.

#include "pendrot/action.hpp"
#include "pendrot/bounds.hpp"
#include "pendrot/error.hpp"
#include "pendrot/io.hpp"
#include "pendrot/loopspace.hpp"
#include "pendrot/model.hpp"
#include "pendrot/solver.hpp"
#include "pendrot/torus.hpp"
#include "pendrot/verify.hpp"
