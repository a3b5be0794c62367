#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>

namespace mfl::csv {

/// Round-trip formatting with 17 significant digits; identical input gives identical bytes.
std::string number(double v);

void header(std::ostream& os, std::initializer_list<std::string_view> columns);

/// One row of numbers; non-finite values are written as empty cells.
void row(std::ostream& os, std::initializer_list<double> values);

}  // namespace mfl::csv
