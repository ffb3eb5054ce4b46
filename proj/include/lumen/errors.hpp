#pragma once

#include <stdexcept>
#include <string>

namespace lumen {

// Base for everything thrown by the library. Subclasses map one-to-one onto
// the failure categories of the public contracts so callers can catch
// narrowly.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor shapes disagree (or a flattened width does not match a network).
class shape_error : public error {
public:
    using error::error;
};

// A scalar/config argument is outside its documented range.
class parameter_error : public error {
public:
    using error::error;
};

// A timestep index is outside the schedule grid.
class index_error : public error {
public:
    using error::error;
};

// Step indices violate the required ordering (e.g. decode with s > t).
class ordering_error : public error {
public:
    using error::error;
};

// A cached forward pass no longer matches the network parameters.
class state_error : public error {
public:
    using error::error;
};

// Clean-image extraction hit a near-singular (t, s) coefficient pair.
class degenerate_pair_error : public error {
public:
    using error::error;
};

// A computed quantity is NaN/Inf where the contract requires finiteness.
class numeric_error : public error {
public:
    using error::error;
};

// Malformed text or binary input (image headers, config files, checkpoints).
class parse_error : public error {
public:
    using error::error;
};

// An input image is too small for the requested operation.
class size_error : public error {
public:
    using error::error;
};

// A run configuration is internally inconsistent or produced an unusable run.
class config_error : public error {
public:
    using error::error;
};

// Training diverged; carries the iteration at which it happened.
class training_error : public error {
public:
    training_error(const std::string& what, long iteration)
        : error(what + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}

    long iteration() const noexcept { return iteration_; }

private:
    long iteration_;
};

}  // namespace lumen
