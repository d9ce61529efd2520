#pragma once

#include "gpgd/bench.hpp"
#include "gpgd/certificate.hpp"
#include "gpgd/constraint.hpp"
#include "gpgd/errors.hpp"
#include "gpgd/linop.hpp"
#include "gpgd/problem.hpp"
#include "gpgd/solver.hpp"
#include "gpgd/symmetry.hpp"
#include "gpgd/vector_ops.hpp"
