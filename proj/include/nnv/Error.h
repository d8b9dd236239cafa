#pragma once

#include <stdexcept>
#include <string>

namespace nnv {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error
{
public:
    ParseError( const std::string &message, unsigned line = 0 )
        : Error( line ? "line " + std::to_string( line ) + ": " + message : message )
        , _line( line )
    {
    }

    unsigned line() const
    {
        return _line;
    }

private:
    unsigned _line;
};

class UsageError : public Error
{
public:
    using Error::Error;
};

class UnsupportedError : public Error
{
public:
    using Error::Error;
};

class NumericalError : public Error
{
public:
    using Error::Error;
};

} // namespace nnv
