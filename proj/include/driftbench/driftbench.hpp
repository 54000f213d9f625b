#pragma once

// Umbrella header for the driftbench toolkit.

#include "driftbench/annotations.hpp"
#include "driftbench/baseline.hpp"
#include "driftbench/commands.hpp"
#include "driftbench/dataset.hpp"
#include "driftbench/demo.hpp"
#include "driftbench/drift.hpp"
#include "driftbench/error.hpp"
#include "driftbench/evaluation.hpp"
#include "driftbench/image.hpp"
#include "driftbench/metrics.hpp"
#include "driftbench/png.hpp"
#include "driftbench/prng.hpp"
#include "driftbench/transforms.hpp"
