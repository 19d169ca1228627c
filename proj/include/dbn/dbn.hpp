#pragma once

// Umbrella header.

#include "dbn/config.hpp"
#include "dbn/data.hpp"
#include "dbn/errors.hpp"
#include "dbn/exact.hpp"
#include "dbn/gradcheck.hpp"
#include "dbn/head.hpp"
#include "dbn/metrics.hpp"
#include "dbn/model_io.hpp"
#include "dbn/pipeline.hpp"
#include "dbn/rbm.hpp"
#include "dbn/rng.hpp"
#include "dbn/stack.hpp"
