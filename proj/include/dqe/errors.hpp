#pragma once

#include <stdexcept>
#include <string>

namespace dqe {

// Configuration / usage problems; CLI exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Missing or inconsistent upstream artifacts; CLI exit code 2.
struct ArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// External service failure after bounded retries; CLI exit code 3.
struct ServiceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dqe
