#pragma once

#include "sgfem/analysis.hpp"
#include "sgfem/assembly.hpp"
#include "sgfem/basis.hpp"
#include "sgfem/error.hpp"
#include "sgfem/linalg.hpp"
#include "sgfem/mesh.hpp"
#include "sgfem/problem.hpp"
#include "sgfem/quadrature.hpp"
#include "sgfem/solver.hpp"
