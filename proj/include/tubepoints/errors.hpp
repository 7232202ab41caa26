#pragma once

#include <stdexcept>
#include <string>

namespace tp {

// Base class for all library errors. Subclasses carry the failure category
// so callers (and the CLI exit-code mapping) can dispatch on type.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible or invalid image/grid dimensions.
class dimension_error : public error {
public:
    explicit dimension_error(const std::string& msg) : error(msg) {}
};

// A point or index outside its valid range.
class bounds_error : public error {
public:
    explicit bounds_error(const std::string& msg) : error(msg) {}
};

// A sizing rule was violated (e.g. more ground-truth points than
// prediction slots, K > N).
class capacity_error : public error {
public:
    explicit capacity_error(const std::string& msg) : error(msg) {}
};

// A hyperparameter outside its documented domain.
class parameter_error : public error {
public:
    explicit parameter_error(const std::string& msg) : error(msg) {}
};

// Paired inputs of mismatched length or naming.
class pairing_error : public error {
public:
    explicit pairing_error(const std::string& msg) : error(msg) {}
};

// A metric that is undefined for the given input (e.g. AUC with a
// single-class ground truth).
class undefined_metric_error : public error {
public:
    explicit undefined_metric_error(const std::string& msg) : error(msg) {}
};

// Malformed input file.
class parse_error : public error {
public:
    explicit parse_error(const std::string& msg) : error(msg) {}
};

// Filesystem failure; the message names the path.
class io_error : public error {
public:
    explicit io_error(const std::string& msg) : error(msg) {}
};

// An API contract was violated (e.g. gradients fed back to a model that
// does not match the forward pass they came from).
class contract_error : public error {
public:
    explicit contract_error(const std::string& msg) : error(msg) {}
};

}  // namespace tp
