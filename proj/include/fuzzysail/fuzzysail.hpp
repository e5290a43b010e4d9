#ifndef FUZZYSAIL_FUZZYSAIL_HPP_
#define FUZZYSAIL_FUZZYSAIL_HPP_

#include "fuzzysail/config.hpp"
#include "fuzzysail/controllers.hpp"
#include "fuzzysail/csv.hpp"
#include "fuzzysail/fuzzy.hpp"
#include "fuzzysail/harness.hpp"
#include "fuzzysail/numeric.hpp"
#include "fuzzysail/sim.hpp"
#include "fuzzysail/stats.hpp"
#include "fuzzysail/wire.hpp"

#endif  // FUZZYSAIL_FUZZYSAIL_HPP_
