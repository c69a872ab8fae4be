#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace magidyn {

// Shortest decimal text that parses back to the same double. NaN and
// infinities are written as "nan", "inf" and "-inf".
std::string format_double(double v);

// Parses the whole of `s` as a double; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view s);

}  // namespace magidyn
