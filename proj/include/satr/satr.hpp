#pragma once

// Umbrella header for the sonar ATR toolkit.

#include "satr/dataset.hpp"
#include "satr/detector.hpp"
#include "satr/error.hpp"
#include "satr/io.hpp"
#include "satr/metrics.hpp"
#include "satr/network.hpp"
#include "satr/noise.hpp"
#include "satr/rng.hpp"
#include "satr/svm.hpp"
#include "satr/synthgen.hpp"
#include "satr/tensor.hpp"
