#pragma once

#include "assembly.hpp"
#include "dense.hpp"
#include "expression.hpp"
#include "ichol.hpp"
#include "krylov.hpp"
#include "mesh.hpp"
#include "mesh_io.hpp"
#include "pcg.hpp"
#include "problem.hpp"
#include "quadrature.hpp"
#include "report.hpp"
#include "solve_report.hpp"
#include "sparse.hpp"
#include "vec.hpp"
#include "verification.hpp"
#include "wg.hpp"
#include "experiment.hpp"
