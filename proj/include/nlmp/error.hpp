#pragma once

#include <stdexcept>
#include <string>

namespace nlmp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class DegenerateInterval : public Error {
public:
    using Error::Error;
};

class TailBoundUnavailable : public Error {
public:
    using Error::Error;
};

class SingularExteriorBlock : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

/// The energy gradient vanishes identically; the iterate is already critical.
class ZeroGradient : public Error {
public:
    using Error::Error;
};

/// t* is undefined along a direction with B[u,u] = 0 or a vanishing denominator.
class ZeroDirection : public Error {
public:
    using Error::Error;
};

class OutsideDomain : public Error {
public:
    using Error::Error;
};

/// An in-loop algorithm invariant was violated (only raised when checks are enabled).
class InvariantViolation : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string key, int line, const std::string& what)
        : Error(format(key, line, what)), key_(std::move(key)), line_(line) {}

    [[nodiscard]] const std::string& key() const noexcept { return key_; }
    [[nodiscard]] int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& key, int line, const std::string& what) {
        std::string msg = "config";
        if (line > 0) msg += " line " + std::to_string(line);
        if (!key.empty()) msg += " key '" + key + "'";
        return msg + ": " + what;
    }

    std::string key_;
    int line_;
};

} // namespace nlmp
