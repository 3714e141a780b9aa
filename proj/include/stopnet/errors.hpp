#pragma once

#include <stdexcept>
#include <string>

namespace stopnet {

// Bad configuration: wrong shapes, unknown kinds, invalid parameter ranges.
// The CLI maps this (and usage_error) to exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Caller misuse of an otherwise valid object (missing label, empty batch, ...).
class usage_error : public std::runtime_error {
public:
    explicit usage_error(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values produced at runtime. The CLI maps this to exit code 3.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stopnet
