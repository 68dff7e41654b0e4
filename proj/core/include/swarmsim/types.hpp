#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace swarmsim {

/// Simulated seconds since the start of a run.
using SimTime = double;

inline constexpr SimTime kNever = -std::numeric_limits<SimTime>::infinity();

/// Opaque peer identity. Ids are never reused within a run.
enum class PeerId : std::uint32_t {};

constexpr std::uint32_t to_index(PeerId id) noexcept { return static_cast<std::uint32_t>(id); }

/// Raised on programming errors (scheduling in the past, a transfer
/// without a slot, ...). Never caught inside the library.
class Fault : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A metric that has no defined value for the given input (e.g. ERC of
/// an empty ledger). Distinct from a zero result.
class MetricError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Configuration rejected by validation; `field()` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

[[noreturn]] inline void fault(const std::string& what) { throw Fault(what); }

inline void require(bool condition, const char* what) {
    if (!condition) fault(what);
}

} // namespace swarmsim
