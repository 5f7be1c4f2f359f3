#pragma once

#include "gerk/errors.hpp"
#include "gerk/random.hpp"
#include "gerk/numeric.hpp"
#include "gerk/partition.hpp"
#include "gerk/convex.hpp"
#include "gerk/solver.hpp"
#include "gerk/oracles.hpp"
#include "gerk/certificates.hpp"
#include "gerk/experiment.hpp"
#include "gerk/io.hpp"
