#pragma once

#include <stdexcept>
#include <string>

namespace mmslam {

/// Two points that must be separated (BS, UE, landmark) coincide.
class DegenerateGeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The Gauss-Newton normal matrix is singular; `block()` names the state
/// block ("ue" or "landmark k") that carries the null direction.
class RankDeficiencyError : public std::runtime_error {
public:
    RankDeficiencyError(const std::string& block, const std::string& what)
        : std::runtime_error(what), block_(block) {}

    const std::string& block() const { return block_; }

private:
    std::string block_;
};

/// Bad user-facing configuration (scene file, CLI flags). Maps to exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mmslam
