#pragma once

#include <stdexcept>
#include <string>

namespace epifit {

// Malformed or inconsistent inputs: schema violations, unbalanced panels,
// invalid configurations, missing groups.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A computation left its numeric domain: negative compartments beyond
// tolerance, loss of identifying variation, non-convergence.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace epifit
