#pragma once

#include "sparsemix/calibration.hpp"
#include "sparsemix/error.hpp"
#include "sparsemix/experiments.hpp"
#include "sparsemix/mixture.hpp"
#include "sparsemix/normal.hpp"
#include "sparsemix/parallel.hpp"
#include "sparsemix/pvalues.hpp"
#include "sparsemix/random.hpp"
#include "sparsemix/report.hpp"
#include "sparsemix/statistics.hpp"
