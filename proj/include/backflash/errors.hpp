#pragma once

#include <stdexcept>
#include <string>

namespace backflash {

// Error classes map one-to-one onto the CLI exit codes (2, 3, 4).

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

class StatisticsError : public std::runtime_error {
public:
    explicit StatisticsError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace backflash
