#pragma once

#include <stdexcept>
#include <string>

namespace fraug {

// Every recoverable failure in the toolkit surfaces as this type; the message
// is meant to be shown to a user verbatim.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fraug
