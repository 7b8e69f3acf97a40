#pragma once
//
// Project     : mixedls
// Module      : mixedls/mixedls.hpp
// Description : umbrella header
//

#include "dense.hpp"
#include "experiment.hpp"
#include "factor.hpp"
#include "generate.hpp"
#include "gls.hpp"
#include "householder.hpp"
#include "io.hpp"
#include "krylov.hpp"
#include "lse.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "precision.hpp"
#include "random.hpp"
#include "refine.hpp"
#include "validate.hpp"
