#pragma once

#include <ostream>

namespace fqw {

// Full acceptance suite: prints one pass/fail line per criterion (tolerances
// pinned in the implementation) and returns the number of failed criteria.
int run_acceptance(std::ostream& out);

} // namespace fqw
