#include "nnv/Format.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace nnv {

std::string formatDouble( double value )
{
    if ( std::isinf( value ) )
        return value > 0 ? "inf" : "-inf";
    char buffer[32];
    std::snprintf( buffer, sizeof( buffer ), "%.17g", value );
    // Prefer the shortest representation that still round-trips.
    for ( int precision = 1; precision < 17; ++precision )
    {
        char shorter[32];
        std::snprintf( shorter, sizeof( shorter ), "%.*g", precision, value );
        if ( std::strtod( shorter, nullptr ) == value )
            return shorter;
    }
    return buffer;
}

std::optional<double> parseDouble( std::string_view token )
{
    if ( token.empty() )
        return std::nullopt;
    if ( token == "inf" || token == "+inf" )
        return HUGE_VAL;
    if ( token == "-inf" )
        return -HUGE_VAL;
    if ( token.front() == '+' )
        token.remove_prefix( 1 );
    double value = 0;
    auto [end, error] = std::from_chars( token.data(), token.data() + token.size(), value );
    if ( error != std::errc() || end != token.data() + token.size() )
        return std::nullopt;
    return value;
}

std::optional<unsigned> parseUnsigned( std::string_view token )
{
    unsigned value = 0;
    auto [end, error] = std::from_chars( token.data(), token.data() + token.size(), value );
    if ( token.empty() || error != std::errc() || end != token.data() + token.size() )
        return std::nullopt;
    return value;
}

std::vector<std::string_view> splitWhitespace( std::string_view line )
{
    std::vector<std::string_view> tokens;
    size_t i = 0;
    while ( i < line.size() )
    {
        while ( i < line.size() && std::isspace( static_cast<unsigned char>( line[i] ) ) )
            ++i;
        size_t start = i;
        while ( i < line.size() && !std::isspace( static_cast<unsigned char>( line[i] ) ) )
            ++i;
        if ( i > start )
            tokens.push_back( line.substr( start, i - start ) );
    }
    return tokens;
}

} // namespace nnv
