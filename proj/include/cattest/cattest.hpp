#pragma once

#include "cattest/batch.hpp"
#include "cattest/chi_square.hpp"
#include "cattest/contingency.hpp"
#include "cattest/csv.hpp"
#include "cattest/datagen.hpp"
#include "cattest/error.hpp"
#include "cattest/exact.hpp"
#include "cattest/experiments.hpp"
#include "cattest/permutation.hpp"
#include "cattest/pipeline.hpp"
#include "cattest/rng.hpp"
#include "cattest/statistics.hpp"
