#pragma once

#include "aiprobe/binning.hpp"
#include "aiprobe/sim.hpp"

#include <string>
#include <unordered_set>
#include <vector>

namespace aiprobe {

// Binned state-coverage ledger: visited states are reduced to tuples of
// 1-based bin indices (bin_count bins per numeric dimension, category index
// for categorical ones) and counted as a set. The fraction over the
// bin_count^D grid is reported exactly from integers, so deep dimension
// counts cannot overflow or underflow it.
class CoverageLedger {
  public:
    CoverageLedger() = default;
    explicit CoverageLedger(std::vector<CoverageDim> dims, int bin_count = 100);

    const std::vector<CoverageDim>& dims() const { return dims_; }
    int bin_count() const { return bin_count_; }
    std::size_t dimension_count() const { return tuple_length_; }

    // Bin tuple of already-projected values under this ledger's dims.
    std::vector<int> bin_tuple(const std::vector<double>& values) const;

    void record(const std::vector<double>& values);
    void record_state(const Simulator& sim, const SimState& state);

    // Inserts a precomputed tuple (campaign workers bin per-config bounds
    // themselves). Entries must be in [1, bin_count].
    void insert_tuple(const std::vector<int>& bins);

    std::size_t unique_bins() const { return visited_.size(); }

    // |visited| / bin_count^D as a double; underflows to 0 for very large D,
    // in which case the scientific string below is still exact.
    double fraction() const;

    // Exact scientific notation, e.g. "1.2345e-36". Requires bin_count to be
    // a power of ten (it is 100 everywhere in this project).
    std::string fraction_scientific() const;

    void merge(const CoverageLedger& other);

  private:
    std::vector<CoverageDim> dims_;
    int bin_count_ = 100;
    std::size_t tuple_length_ = 0; // fixed by the first insert when dims_ is empty
    std::unordered_set<std::string> visited_;
};

} // namespace aiprobe
