#pragma once

#include <stdexcept>
#include <string>

namespace odisphere {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid user configuration (bad interval, inconsistent params, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Input that has no meaningful answer: all-zero maps, constant maps, ...
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace odisphere
