#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pslab/certified.hpp"

namespace pslab {

inline constexpr std::uint64_t kDefaultSegmentSize = std::uint64_t{1} << 22;
inline constexpr std::size_t kDefaultExceptionCap = 1000000;

// Indicator of {[m^c] : m >= 1} over [0, x_max] plus the floors [p^c] of the
// primes p with [p^c] < x_max. Shared read-only by all segments.
class FloorTable {
public:
    FloorTable(std::uint64_t x_max, const Exponent& c, const PrecisionPolicy& policy = {}, unsigned workers = 1);

    std::uint64_t x_max() const { return x_max_; }
    const Exponent& c() const { return c_; }
    bool is_floor(std::uint64_t v) const { return (bits_[v >> 6] >> (v & 63)) & 1; }
    const std::vector<std::uint64_t>& bits() const { return bits_; }
    const std::vector<std::uint64_t>& prime_floors() const { return prime_floors_; }
    // Smallest value whose floor set is not certified; sums above it are unreliable.
    std::optional<std::uint64_t> tainted_from() const { return tainted_from_; }

private:
    std::uint64_t x_max_;
    Exponent c_;
    std::vector<std::uint64_t> bits_;
    std::vector<std::uint64_t> prime_floors_;
    std::optional<std::uint64_t> tainted_from_;
};

// Achievable n in (lo, hi]: bit n - lo - 1 set iff n = [m^c] + [p^c] for some m >= 1, prime p.
struct ScanSegment {
    std::uint64_t lo = 0, hi = 0;
    std::vector<std::uint64_t> achievable;
    bool aborted = false;
    std::string abort_reason;

    bool is_achievable(std::uint64_t n) const {
        const std::uint64_t i = n - lo - 1;
        return (achievable[i >> 6] >> (i & 63)) & 1;
    }
    std::vector<std::uint64_t> exceptions() const;
    std::uint64_t exception_count() const;
};

ScanSegment scan_segment(std::uint64_t lo, std::uint64_t hi, const FloorTable& table);
ScanSegment scan_segment(std::uint64_t lo, std::uint64_t hi, const Exponent& c, const PrecisionPolicy& policy = {});

struct Checkpoint {
    std::uint64_t x = 0;
    std::uint64_t E = 0;
    bool lower_bound = false;  // an aborted segment lies below x
};

struct SlopeFit {
    std::optional<double> slope;
    double intercept = 0.0;
    std::vector<double> residuals;
    std::string note;
};

// Least-squares slope of log E against log x over checkpoints with x in [x_lo, x_hi] and E > 0.
SlopeFit fit_exponent(const std::vector<Checkpoint>& points, double x_lo = 0.0, double x_hi = 1e300);

struct ScanOptions {
    std::uint64_t segment_size = kDefaultSegmentSize;
    unsigned workers = 1;
    std::vector<std::uint64_t> checkpoints;  // empty: powers of ten below x_max, then x_max
    std::size_t exception_cap = kDefaultExceptionCap;
    PrecisionPolicy policy;
    std::string resume_path;  // empty: no resume file
    std::uint64_t max_segments = 0;  // stop after this many new segments; 0: run to x_max
};

struct ScanReport {
    Exponent c = Exponent::rational(1, 1);
    std::uint64_t x_max = 0;
    std::vector<Checkpoint> checkpoints;
    std::vector<std::uint64_t> exceptions;  // sorted, at most exception_cap entries
    bool exceptions_truncated = false;
    std::optional<std::uint64_t> largest_exception;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> aborted_segments;
    SlopeFit fit;
    double theorem2_exponent = 0.0;  // 3(1 - 1/c)
    std::uint64_t scanned_to = 0;      // equals x_max when complete
    bool complete() const { return scanned_to == x_max; }
};

std::vector<std::uint64_t> decade_checkpoints(std::uint64_t x_max);

ScanReport exceptional_counts(std::uint64_t x_max, const Exponent& c, const ScanOptions& opts = {});

// Columns: schema_version, x, E, density, fitted_slope_so_far, lower_bound.
void write_checkpoints_csv(std::ostream& os, const ScanReport& report);
// One integer per line, sorted.
void write_exceptions(std::ostream& os, const ScanReport& report);

// Resume state after the last completed segment. Binary: 8-byte magic, then
// little-endian u64 fields.
struct ResumeState {
    std::uint64_t x_max = 0;
    std::uint64_t segment_size = 0;
    std::string exponent;  // Exponent::to_string()
    std::uint64_t next_lo = 0;
    std::uint64_t E = 0;
    std::uint64_t largest_exception = 0;  // 0: none yet
    std::uint64_t truncated = 0;
    std::vector<Checkpoint> checkpoints;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> aborted;
    std::vector<std::uint64_t> exceptions;
};

inline constexpr std::uint64_t kResumeVersion = 1;

void save_resume(const std::string& path, const ResumeState& state);
ResumeState load_resume(const std::string& path);

} // namespace pslab
