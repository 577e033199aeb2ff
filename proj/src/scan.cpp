#include "pslab/scan.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "pslab/log.hpp"
#include "pslab/sieve.hpp"

namespace pslab {

namespace {

constexpr std::uint64_t kScanCap = std::uint64_t{1} << 32;
constexpr char kResumeMagic[8] = {'P', 'S', 'L', 'A', 'B', 'R', 'S', '\0'};

// 64 bits of `bits` starting at signed bit position s; positions outside are 0.
std::uint64_t window64(const std::vector<std::uint64_t>& bits, std::int64_t s) {
    if (s <= -64) return 0;
    if (s < 0) return bits.empty() ? 0 : bits[0] << (-s);
    const auto q = static_cast<std::size_t>(s >> 6);
    const unsigned r = static_cast<unsigned>(s & 63);
    if (q >= bits.size()) return 0;
    std::uint64_t w = bits[q] >> r;
    if (r != 0 && q + 1 < bits.size()) w |= bits[q + 1] << (64 - r);
    return w;
}

template <typename Fn>
void run_workers(unsigned workers, std::uint64_t count, Fn&& fn) {
    workers = std::max(1u, workers);
    if (workers == 1 || count < 2) {
        fn(std::uint64_t{0}, count);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::uint64_t step = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::uint64_t b = std::min(count, w * step), e = std::min(count, b + step);
        pool.emplace_back([&, w, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace

FloorTable::FloorTable(std::uint64_t x_max, const Exponent& c, const PrecisionPolicy& policy, unsigned workers)
    : x_max_(x_max), c_(c) {
    if (x_max < 1 || x_max > kScanCap) throw DomainError("scan: x_max must lie in [1, 2^32]");
    if (c.approx() < 1.0) throw DomainError("scan: exponent must be >= 1");
    const auto m_max = static_cast<std::uint64_t>(std::pow(static_cast<double>(x_max) + 1.0, 1.0 / c.approx())) + 2;
    std::vector<std::uint64_t> floors(m_max, 0);  // 0 marks an undecided floor
    std::uint64_t taint = std::numeric_limits<std::uint64_t>::max();
    std::mutex taint_mutex;
    run_workers(workers, m_max, [&](std::uint64_t b, std::uint64_t e) {
        std::uint64_t local = std::numeric_limits<std::uint64_t>::max();
        for (std::uint64_t i = b; i < e; ++i) {
            const auto m = static_cast<i128>(i + 1);
            const FloorResult r = certified_floor_pow(m, c, policy);
            if (r.determinate()) {
                floors[i] = static_cast<std::uint64_t>(std::min<i128>(*r.value, static_cast<i128>(x_max) + 1));
            } else {
                // m^c sits on an integer k within the cap: sums above k are unreliable.
                const double k = std::round(std::pow(static_cast<double>(i + 1), c.approx()));
                local = std::min(local, static_cast<std::uint64_t>(std::max(k, 1.0)));
            }
        }
        const std::lock_guard lock(taint_mutex);
        taint = std::min(taint, local);
    });
    if (taint != std::numeric_limits<std::uint64_t>::max()) {
        tainted_from_ = taint;
        log_warn("scan: undecided floor; sums above " + std::to_string(taint) + " will be aborted");
    }

    bits_.assign(x_max / 64 + 1, 0);
    for (const std::uint64_t f : floors)
        if (f >= 1 && f <= x_max) bits_[f >> 6] |= std::uint64_t{1} << (f & 63);
    for (const std::uint64_t p : primes_in(1, m_max)) {
        const std::uint64_t f = floors[p - 1];
        if (f >= 1 && f < x_max) prime_floors_.push_back(f);
    }
}

std::vector<std::uint64_t> ScanSegment::exceptions() const {
    std::vector<std::uint64_t> out;
    if (aborted) return out;
    for (std::uint64_t n = lo + 1; n <= hi; ++n)
        if (!is_achievable(n)) out.push_back(n);
    return out;
}

std::uint64_t ScanSegment::exception_count() const {
    if (aborted) return 0;
    std::uint64_t marked = 0;
    for (const std::uint64_t w : achievable) marked += static_cast<std::uint64_t>(std::popcount(w));
    return (hi - lo) - marked;
}

ScanSegment scan_segment(std::uint64_t lo, std::uint64_t hi, const FloorTable& table) {
    if (hi <= lo) throw DomainError("scan_segment: empty segment");
    if (hi > table.x_max()) throw DomainError("scan_segment: segment exceeds the floor table");
    ScanSegment seg;
    seg.lo = lo;
    seg.hi = hi;
    const std::uint64_t len = hi - lo;
    const std::size_t words = static_cast<std::size_t>((len + 63) / 64);
    seg.achievable.assign(words, 0);
    if (table.tainted_from() && hi > *table.tainted_from()) {
        seg.aborted = true;
        seg.abort_reason = "undecided floor near " + std::to_string(*table.tainted_from());
        return seg;
    }
    const std::uint64_t tail_mask = (len % 64) ? (std::uint64_t{1} << (len % 64)) - 1 : ~std::uint64_t{0};
    auto unmarked = [&] {
        std::uint64_t marked = 0;
        for (const std::uint64_t w : seg.achievable) marked += static_cast<std::uint64_t>(std::popcount(w));
        return len - marked;
    };

    // Shift-OR whole floor sets while most of the segment is unmarked, then
    // finish the stragglers one n at a time.
    const auto& pf = table.prime_floors();
    const auto& bits = table.bits();
    std::size_t i = 0;
    for (; i < pf.size() && pf[i] < hi; ++i) {
        const std::int64_t s = static_cast<std::int64_t>(lo + 1) - static_cast<std::int64_t>(pf[i]);
        for (std::size_t w = 0; w < words; ++w) seg.achievable[w] |= window64(bits, s + static_cast<std::int64_t>(64 * w));
        seg.achievable.back() &= tail_mask;
        if (i % 16 == 15 && unmarked() * 4 < words) {
            ++i;
            break;
        }
    }
    if (i < pf.size() && pf[i] < hi) {
        for (std::uint64_t n = lo + 1; n <= hi; ++n) {
            if (seg.is_achievable(n)) continue;
            for (std::size_t k = i; k < pf.size() && pf[k] < n; ++k)
                if (table.is_floor(n - pf[k])) {
                    const std::uint64_t b = n - lo - 1;
                    seg.achievable[b >> 6] |= std::uint64_t{1} << (b & 63);
                    break;
                }
        }
    }
    return seg;
}

ScanSegment scan_segment(std::uint64_t lo, std::uint64_t hi, const Exponent& c, const PrecisionPolicy& policy) {
    return scan_segment(lo, hi, FloorTable(hi, c, policy));
}

SlopeFit fit_exponent(const std::vector<Checkpoint>& points, double x_lo, double x_hi) {
    SlopeFit fit;
    std::vector<double> lx, ly;
    bool any_in_window = false;
    for (const auto& p : points) {
        const double x = static_cast<double>(p.x);
        if (x < x_lo || x > x_hi) continue;
        any_in_window = true;
        if (p.E == 0) continue;
        lx.push_back(std::log(x));
        ly.push_back(std::log(static_cast<double>(p.E)));
    }
    if (lx.empty()) {
        fit.note = any_in_window ? "exceptional set empty in window" : "no checkpoints in window";
        return fit;
    }
    if (lx.size() < 3) {
        fit.note = "fewer than 3 nonzero checkpoints in window";
        return fit;
    }
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) sx += lx[k], sy += ly[k];
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
    }
    if (sxx == 0.0) {
        fit.note = "checkpoints share one x";
        return fit;
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - *fit.slope * mx;
    for (std::size_t k = 0; k < lx.size(); ++k) fit.residuals.push_back(ly[k] - (fit.intercept + *fit.slope * lx[k]));
    return fit;
}

std::vector<std::uint64_t> decade_checkpoints(std::uint64_t x_max) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t x = 10; x < x_max; x *= 10) out.push_back(x);
    out.push_back(x_max);
    return out;
}

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw DomainError("resume file truncated");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    return v;
}

} // namespace

void save_resume(const std::string& path, const ResumeState& st) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DomainError("cannot write resume file " + tmp);
        os.write(kResumeMagic, 8);
        put_u64(os, kResumeVersion);
        put_u64(os, st.x_max);
        put_u64(os, st.segment_size);
        put_u64(os, st.exponent.size());
        os.write(st.exponent.data(), static_cast<std::streamsize>(st.exponent.size()));
        put_u64(os, st.next_lo);
        put_u64(os, st.E);
        put_u64(os, st.largest_exception);
        put_u64(os, st.truncated);
        put_u64(os, st.checkpoints.size());
        for (const auto& c : st.checkpoints) {
            put_u64(os, c.x);
            put_u64(os, c.E);
            put_u64(os, c.lower_bound ? 1 : 0);
        }
        put_u64(os, st.aborted.size());
        for (const auto& [a, b] : st.aborted) {
            put_u64(os, a);
            put_u64(os, b);
        }
        put_u64(os, st.exceptions.size());
        for (const std::uint64_t e : st.exceptions) put_u64(os, e);
        if (!os) throw DomainError("failed writing resume file " + tmp);
    }
    std::rename(tmp.c_str(), path.c_str());
}

ResumeState load_resume(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DomainError("cannot open resume file " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kResumeMagic, 8) != 0) throw DomainError("not a resume file: " + path);
    if (const std::uint64_t v = get_u64(is); v != kResumeVersion)
        throw DomainError("unsupported resume file version " + std::to_string(v));
    ResumeState st;
    st.x_max = get_u64(is);
    st.segment_size = get_u64(is);
    const std::uint64_t len = get_u64(is);
    if (len > 4096) throw DomainError("resume file corrupt");
    st.exponent.resize(len);
    if (!is.read(st.exponent.data(), static_cast<std::streamsize>(len))) throw DomainError("resume file truncated");
    st.next_lo = get_u64(is);
    st.E = get_u64(is);
    st.largest_exception = get_u64(is);
    st.truncated = get_u64(is);
    const std::uint64_t nc = get_u64(is);
    for (std::uint64_t k = 0; k < nc; ++k) {
        Checkpoint c;
        c.x = get_u64(is);
        c.E = get_u64(is);
        c.lower_bound = get_u64(is) != 0;
        st.checkpoints.push_back(c);
    }
    const std::uint64_t na = get_u64(is);
    for (std::uint64_t k = 0; k < na; ++k) {
        const std::uint64_t a = get_u64(is);
        st.aborted.emplace_back(a, get_u64(is));
    }
    const std::uint64_t ne = get_u64(is);
    for (std::uint64_t k = 0; k < ne; ++k) st.exceptions.push_back(get_u64(is));
    return st;
}

ScanReport exceptional_counts(std::uint64_t x_max, const Exponent& c, const ScanOptions& opts) {
    if (opts.segment_size < 1) throw DomainError("scan: segment size must be positive");
    std::vector<std::uint64_t> grid = opts.checkpoints.empty() ? decade_checkpoints(x_max) : opts.checkpoints;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.front() < 1 || grid.back() > x_max) throw DomainError("scan: checkpoints must lie in [1, x_max]");

    ResumeState st;
    st.x_max = x_max;
    st.segment_size = opts.segment_size;
    st.exponent = c.to_string();
    if (!opts.resume_path.empty() && std::ifstream(opts.resume_path).good()) {
        ResumeState prev = load_resume(opts.resume_path);
        if (prev.x_max != x_max || prev.segment_size != opts.segment_size || prev.exponent != st.exponent)
            throw DomainError("resume file was written for a different scan (x_max, segment size or exponent)");
        st = std::move(prev);
        log_info("scan: resuming at " + std::to_string(st.next_lo));
    }

    const FloorTable table(x_max, c, opts.policy, opts.workers);
    std::size_t next_cp = st.checkpoints.size();
    const unsigned workers = std::max(1u, opts.workers);
    std::uint64_t budget = opts.max_segments ? opts.max_segments : std::numeric_limits<std::uint64_t>::max();
    while (st.next_lo < x_max && budget > 0) {
        std::vector<std::pair<std::uint64_t, std::uint64_t>> batch;
        for (std::uint64_t lo = st.next_lo; lo < x_max && batch.size() < std::min<std::uint64_t>(workers, budget);
             lo += opts.segment_size)
            batch.emplace_back(lo, std::min(x_max, lo + opts.segment_size));
        budget -= batch.size();
        std::vector<ScanSegment> segs(batch.size());
        run_workers(workers, batch.size(), [&](std::uint64_t b, std::uint64_t e) {
            for (std::uint64_t k = b; k < e; ++k) segs[k] = scan_segment(batch[k].first, batch[k].second, table);
        });
        // Single reducer, segment order.
        for (const auto& seg : segs) {
            if (seg.aborted) {
                log_warn("scan: segment (" + std::to_string(seg.lo) + ", " + std::to_string(seg.hi) +
                         "] aborted: " + seg.abort_reason);
                st.aborted.emplace_back(seg.lo, seg.hi);
            }
            const auto exc = seg.exceptions();
            std::size_t k = 0;
            while (next_cp < grid.size() && grid[next_cp] <= seg.hi) {
                const std::uint64_t x = grid[next_cp];
                while (k < exc.size() && exc[k] <= x) {
                    ++st.E;
                    ++k;
                }
                st.checkpoints.push_back({x, st.E, !st.aborted.empty()});
                ++next_cp;
            }
            st.E += exc.size() - k;
            for (const std::uint64_t n : exc) {
                if (st.exceptions.size() < opts.exception_cap) st.exceptions.push_back(n);
                else st.truncated = 1;
            }
            if (!exc.empty()) st.largest_exception = exc.back();
            st.next_lo = seg.hi;
        }
        if (!opts.resume_path.empty()) save_resume(opts.resume_path, st);
    }

    ScanReport rep;
    rep.c = c;
    rep.x_max = x_max;
    rep.checkpoints = st.checkpoints;
    rep.exceptions = st.exceptions;
    rep.exceptions_truncated = st.truncated != 0;
    if (st.largest_exception != 0) rep.largest_exception = st.largest_exception;
    rep.aborted_segments = st.aborted;
    rep.fit = fit_exponent(rep.checkpoints);
    rep.theorem2_exponent = 3.0 * (1.0 - 1.0 / c.approx());
    rep.scanned_to = st.next_lo;
    return rep;
}

void write_checkpoints_csv(std::ostream& os, const ScanReport& report) {
    os << "schema_version,x,E,density,fitted_slope_so_far,lower_bound\n";
    const auto prec = os.precision(17);
    for (std::size_t k = 0; k < report.checkpoints.size(); ++k) {
        const auto& cp = report.checkpoints[k];
        const std::vector<Checkpoint> prefix(report.checkpoints.begin(), report.checkpoints.begin() + k + 1);
        const SlopeFit f = fit_exponent(prefix);
        os << 1 << ',' << cp.x << ',' << cp.E << ',' << static_cast<double>(cp.E) / static_cast<double>(cp.x) << ',';
        if (f.slope) os << *f.slope;
        os << ',' << (cp.lower_bound ? 1 : 0) << '\n';
    }
    os.precision(prec);
}

void write_exceptions(std::ostream& os, const ScanReport& report) {
    for (const std::uint64_t n : report.exceptions) os << n << '\n';
}

} // namespace pslab
