#include "aiprobe/coverage.hpp"

#include "aiprobe/errors.hpp"

#include <cmath>

namespace aiprobe {

CoverageLedger::CoverageLedger(std::vector<CoverageDim> dims, int bin_count)
    : dims_(std::move(dims)), bin_count_(bin_count), tuple_length_(dims_.size()) {
    if (bin_count_ < 1) throw ConstraintError("coverage: bin_count must be positive");
    for (const CoverageDim& dim : dims_)
        if (dim.categorical && dim.category_count > bin_count_)
            throw ConstraintError("coverage: dimension '" + dim.name + "' has more categories than bins");
}

std::vector<int> CoverageLedger::bin_tuple(const std::vector<double>& values) const {
    if (values.size() != dims_.size()) throw ConstraintError("coverage: value tuple does not match the dimensions");
    std::vector<int> bins(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (dims_[i].categorical) bins[i] = static_cast<int>(values[i]) + 1;
        else bins[i] = bin_index(values[i], dims_[i].lo, dims_[i].hi, bin_count_);
    }
    return bins;
}

void CoverageLedger::record(const std::vector<double>& values) { insert_tuple(bin_tuple(values)); }

void CoverageLedger::record_state(const Simulator& sim, const SimState& state) {
    record(sim.coverage_values(state));
}

void CoverageLedger::insert_tuple(const std::vector<int>& bins) {
    if (tuple_length_ == 0 && visited_.empty() && dims_.empty()) tuple_length_ = bins.size();
    if (bins.size() != tuple_length_) throw ConstraintError("coverage: tuple length mismatch");
    std::string key;
    key.reserve(bins.size());
    for (int bin : bins) {
        if (bin < 1 || bin > bin_count_)
            throw ConstraintError("coverage: bin index " + std::to_string(bin) + " outside [1, " +
                                  std::to_string(bin_count_) + "]");
        key.push_back(static_cast<char>(bin));
    }
    visited_.insert(std::move(key));
}

double CoverageLedger::fraction() const {
    if (visited_.empty()) return 0.0;
    double log_fraction = std::log(static_cast<double>(visited_.size())) -
                          static_cast<double>(tuple_length_) * std::log(static_cast<double>(bin_count_));
    return std::exp(log_fraction);
}

std::string CoverageLedger::fraction_scientific() const {
    if (visited_.empty()) return "0";

    // Exact arithmetic: k / (10^p)^D is the digits of k with a shifted
    // exponent, so no floating point is involved.
    int pow10 = 0;
    for (int value = bin_count_; value > 1; value /= 10, ++pow10)
        if (value % 10 != 0) throw ConstraintError("coverage: exact fractions require a power-of-ten bin count");

    const std::string digits = std::to_string(visited_.size());
    long long exponent = static_cast<long long>(digits.size()) - 1 -
                         static_cast<long long>(pow10) * static_cast<long long>(tuple_length_);
    std::string mantissa = digits.substr(0, 1);
    std::string rest = digits.substr(1);
    while (!rest.empty() && rest.back() == '0') rest.pop_back();
    if (!rest.empty()) mantissa += "." + rest;
    return mantissa + "e" + std::to_string(exponent);
}

void CoverageLedger::merge(const CoverageLedger& other) {
    if (other.visited_.empty()) return;
    if (tuple_length_ == 0 && visited_.empty() && dims_.empty()) tuple_length_ = other.tuple_length_;
    if (other.tuple_length_ != tuple_length_ || other.bin_count_ != bin_count_)
        throw ConstraintError("coverage: merging incompatible ledgers");
    visited_.insert(other.visited_.begin(), other.visited_.end());
}

} // namespace aiprobe
