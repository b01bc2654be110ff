#pragma once

#include "qgeom/dual.hpp"
#include "qgeom/dynamics.hpp"
#include "qgeom/error.hpp"
#include "qgeom/expr.hpp"
#include "qgeom/geometry.hpp"
#include "qgeom/model.hpp"
#include "qgeom/numerics.hpp"
#include "qgeom/qgt.hpp"
