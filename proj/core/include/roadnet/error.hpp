#pragma once

#include <stdexcept>
#include <string>

namespace roadnet {

// Thrown for contract violations and malformed inputs across the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
};

}  // namespace roadnet
