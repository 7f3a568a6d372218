#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace quench {

/// Invalid parameters or configuration supplied by the caller.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical integration could not proceed (stiffness, negative mass,
/// blow-up, boundary leakage). Carries the simulation time of the failure.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double t)
        : std::runtime_error(what + " (t = " + std::to_string(t) + ")"), detail_(what), time_(t) {}

    double time() const noexcept { return time_; }
    const std::string& detail() const noexcept { return detail_; }

    /// Same failure with `context` prepended, e.g. the index of the run that failed.
    NumericalError prefixed(const std::string& context) const { return {context + detail_, time_}; }

private:
    std::string detail_;
    double time_;
};

/// Winding is undefined because the field vanishes at a lattice site.
class UndefinedWinding : public std::domain_error {
public:
    explicit UndefinedWinding(std::size_t site)
        : std::domain_error("field vanishes at site " + std::to_string(site) + "; winding undefined"), site_(site) {}

    std::size_t site() const noexcept { return site_; }

private:
    std::size_t site_;
};

} // namespace quench
