#pragma once

#include <stdexcept>
#include <string>

namespace isac {

// Numerical integration failed to reach the requested agreement between
// successive grid refinements.
class QuadratureError : public std::runtime_error {
public:
    explicit QuadratureError(const std::string& what) : std::runtime_error(what) {}
};

// Conic solve did not converge to the requested accuracy.  `status` holds a
// short machine-readable tag ("max_iters", "stalled", "numerical", ...).
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::string status_tag)
        : std::runtime_error(what), status(std::move(status_tag)) {}
    std::string status;
};

// A solution came back structurally unusable: relaxation not tight, rank
// profile inconsistent with the dual certificate, or a purified beam set
// violating a constraint beyond tolerance.
class CertificateError : public std::runtime_error {
public:
    explicit CertificateError(const std::string& what) : std::runtime_error(what) {}
};

// Configuration rejected: unparsable document or a field outside its domain.
// `field` is the dotted path of the offending entry ("link.power_dbm",
// "prior.components[1].weight"), empty for document-level failures.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, std::string field_path = {})
        : std::runtime_error(field_path.empty() ? what : field_path + ": " + what),
          field(std::move(field_path)) {}
    std::string field;
};

}  // namespace isac
