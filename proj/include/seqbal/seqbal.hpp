#pragma once

#include "seqbal/atesim.hpp"
#include "seqbal/core.hpp"
#include "seqbal/designs.hpp"
#include "seqbal/error.hpp"
#include "seqbal/harness.hpp"
#include "seqbal/instances.hpp"
#include "seqbal/io.hpp"
#include "seqbal/matching.hpp"
#include "seqbal/partition.hpp"
#include "seqbal/rng.hpp"
#include "seqbal/stats.hpp"
