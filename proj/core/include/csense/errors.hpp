#pragma once

#include <stdexcept>
#include <string>

namespace csense {

// Configuration problems (bad flags, invalid method combinations, malformed
// experiment files). The CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Problems with the data itself (unparseable CSV, missing costs, schema
// mismatches). The CLI maps these to exit code 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace csense
