#include "aiprobe/scalar.hpp"

#include "aiprobe/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace aiprobe {

double scalar_number(const Scalar& s) {
    if (is_int(s)) return static_cast<double>(std::get<std::int64_t>(s));
    if (is_real(s)) return std::get<double>(s);
    throw ConstraintError("categorical value '" + std::get<std::string>(s) + "' used where a number is required");
}

std::string format_double(double v) {
    if (v == 0.0) v = 0.0; // normalize -0
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    std::string out(buf, res.ptr);
    // Keep reals visually distinct from ints ("3" -> "3.0") so that the
    // declared data type survives a serialize/parse round trip.
    if (out.find('.') == std::string::npos && out.find('e') == std::string::npos &&
        out.find("inf") == std::string::npos && out.find("nan") == std::string::npos) {
        out += ".0";
    }
    return out;
}

std::string format_double_sig12(double v) {
    if (v == 0.0) v = 0.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string format_scalar(const Scalar& s) {
    if (is_int(s)) return std::to_string(std::get<std::int64_t>(s));
    if (is_real(s)) return format_double(std::get<double>(s));
    return std::get<std::string>(s);
}

const Scalar& assignment_scalar(const Assignment& a, const std::string& name) {
    auto it = a.find(name);
    if (it == a.end()) throw ConstraintError("no value bound for attribute '" + name + "'");
    if (it->second.size() != 1)
        throw ConstraintError("attribute '" + name + "' is list-valued; a scalar was required");
    return it->second.front();
}

double assignment_number(const Assignment& a, const std::string& name) {
    return scalar_number(assignment_scalar(a, name));
}

} // namespace aiprobe
