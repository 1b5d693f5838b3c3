#pragma once

#include <stdexcept>
#include <string>

namespace facetell {

// Invalid argument or geometry; maps to CLI exit code 1.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// File or usage problem; maps to CLI exit code 2.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace facetell
