#include "mfl/csv.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace mfl::csv {

std::string number(double v) {
    if (!std::isfinite(v)) return {};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void header(std::ostream& os, std::initializer_list<std::string_view> columns) {
    bool first = true;
    for (auto c : columns) {
        if (!first) os << ',';
        os << c;
        first = false;
    }
    os << '\n';
}

void row(std::ostream& os, std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
        if (!first) os << ',';
        os << number(v);
        first = false;
    }
    os << '\n';
}

}  // namespace mfl::csv
