#pragma once

#include <stdexcept>
#include <string>

namespace coreselect {

/// Base class for every diagnostic raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent on-disk data (feature files, id sidecars, CSV).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A value violates an invariant or an operation precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Bad or incomplete pipeline configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Wraps a failure with the pipeline stage (and cluster, when known) it came from.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what, int cluster = -1)
        : Error(format(stage, what, cluster)), stage_(std::move(stage)), cluster_(cluster) {}

    const std::string& stage() const noexcept { return stage_; }
    int cluster() const noexcept { return cluster_; }

private:
    static std::string format(const std::string& stage, const std::string& what, int cluster) {
        std::string s = "[stage=" + stage;
        if (cluster >= 0) s += " cluster=" + std::to_string(cluster);
        return s + "] " + what;
    }

    std::string stage_;
    int cluster_;
};

} // namespace coreselect
