#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace aiprobe {

// One attribute value: an integer, a real, or a categorical label.
using Scalar = std::variant<std::int64_t, double, std::string>;

inline bool is_int(const Scalar& s) { return std::holds_alternative<std::int64_t>(s); }
inline bool is_real(const Scalar& s) { return std::holds_alternative<double>(s); }
inline bool is_category(const Scalar& s) { return std::holds_alternative<std::string>(s); }

// Numeric view of an int or real scalar; throws for categorical.
double scalar_number(const Scalar& s);

// Shortest round-trip decimal text: integers without a decimal point, reals
// via to_chars so that parse(format(x)) == x bit-for-bit.
std::string format_scalar(const Scalar& s);
std::string format_double(double v);

// Fixed-precision text used for canonical state keys (12 significant digits).
std::string format_double_sig12(double v);

// A (possibly owner-qualified) attribute name -> values mapping. Ordered map
// so iteration, serialization, and hashing are deterministic.
using Assignment = std::map<std::string, std::vector<Scalar>>;

// Convenience for scalar-valued entries; throws if missing or list-valued.
const Scalar& assignment_scalar(const Assignment& a, const std::string& name);
double assignment_number(const Assignment& a, const std::string& name);

} // namespace aiprobe
