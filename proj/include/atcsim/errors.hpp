#pragma once

#include <stdexcept>
#include <string>

namespace atcsim
{
    /// Malformed static configuration (airspace, wind grids, model files).
    class DefinitionError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Argument outside an operation's numeric domain.
    class DomainError : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    class FitError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };
}
