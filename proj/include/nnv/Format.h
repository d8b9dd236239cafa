#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nnv {

// Shortest form that reads back exactly (17 significant digits); "inf"/"-inf" for infinities.
std::string formatDouble( double value );

std::optional<double> parseDouble( std::string_view token );
std::optional<unsigned> parseUnsigned( std::string_view token );

std::vector<std::string_view> splitWhitespace( std::string_view line );

} // namespace nnv
