#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "pslab/representation.hpp"
#include "pslab/scan.hpp"

using namespace pslab;

namespace {

std::vector<std::uint64_t> oracle_exceptions(std::uint64_t lo, std::uint64_t hi, unsigned a, unsigned b) {
    const auto ach = oracle::achievable_exhaustive(lo, hi, a, b);
    std::vector<std::uint64_t> out;
    for (std::uint64_t n = lo + 1; n <= hi; ++n)
        if (!ach.count(n)) out.push_back(n);
    return out;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("pslab_test_" + name)).string();
}

} // namespace

TEST_CASE("c = 1 leaves exactly n = 1, 2 unrepresented") {
    const auto rep = exceptional_counts(100000, Exponent::rational(1, 1), {.segment_size = 4096});
    REQUIRE(rep.complete());
    for (const auto& cp : rep.checkpoints) CHECK(cp.E == 2);
    CHECK(rep.exceptions == std::vector<std::uint64_t>{1, 2});
    CHECK(*rep.largest_exception == 2);
}

TEST_CASE("small segment against the exhaustive double loop") {
    const auto seg = scan_segment(0, 20, Exponent::rational(3, 2));
    CHECK(seg.exceptions() == oracle_exceptions(0, 20, 3, 2));
    CHECK(seg.exception_count() == seg.exceptions().size());
}

TEST_CASE("scan of (0, 10^4] equals the per-n brute force") {
    for (auto [a, b] : {std::pair{21u, 20u}, std::pair{6u, 5u}, std::pair{13u, 10u}}) {
        const Exponent c = Exponent::rational(a, b);
        const auto rep = exceptional_counts(10000, c, {.segment_size = 1000});
        std::vector<std::uint64_t> brute;
        for (i128 n = 1; n <= 10000; ++n)
            if (!find_representation_bruteforce(n, c)) brute.push_back(static_cast<std::uint64_t>(n));
        CHECK(rep.exceptions == brute);
        CHECK(rep.exceptions == oracle_exceptions(0, 10000, a, b));
        CHECK(rep.checkpoints.back().E == brute.size());
    }
}

TEST_CASE("interior segments against the exhaustive oracle") {
    const Exponent c = Exponent::rational(13, 10);
    const FloorTable table(20000, c);
    for (auto [lo, hi] : {std::pair{5000u, 9000u}, std::pair{12345u, 20000u}, std::pair{63u, 64u}}) {
        const auto seg = scan_segment(lo, hi, table);
        CHECK(seg.exceptions() == oracle_exceptions(lo, hi, 13, 10));
    }
}

TEST_CASE("tiling and worker count do not change the result") {
    const Exponent c = Exponent::rational(6, 5);
    const auto one = exceptional_counts(200000, c, {.segment_size = 200000});
    for (std::uint64_t seg : {100000u, 4096u, 777u})
        for (unsigned w : {1u, 3u}) {
            const auto r = exceptional_counts(200000, c, {.segment_size = seg, .workers = w});
            CHECK(r.exceptions == one.exceptions);
            REQUIRE(r.checkpoints.size() == one.checkpoints.size());
            for (std::size_t k = 0; k < r.checkpoints.size(); ++k) CHECK(r.checkpoints[k].E == one.checkpoints[k].E);
        }
}

TEST_CASE("checkpoints are cumulative and consistent with the list") {
    const auto rep = exceptional_counts(100000, Exponent::rational(13, 10), {.segment_size = 3000});
    std::uint64_t last = 0;
    for (const auto& cp : rep.checkpoints) {
        CHECK(cp.E >= last);
        last = cp.E;
        const auto below = static_cast<std::uint64_t>(
            std::upper_bound(rep.exceptions.begin(), rep.exceptions.end(), cp.x) - rep.exceptions.begin());
        CHECK(cp.E == below);
    }
    CHECK(rep.checkpoints.back().x == 100000);
    CHECK(*rep.largest_exception == rep.exceptions.back());
    CHECK(rep.theorem2_exponent == doctest::Approx(3 * 0.3 / 1.3));

    std::ostringstream csv, list;
    write_checkpoints_csv(csv, rep);
    write_exceptions(list, rep);
    CHECK(csv.str().rfind("schema_version,x,E,density,fitted_slope_so_far,lower_bound\n", 0) == 0);
    std::istringstream in(list.str());
    std::uint64_t v, count = 0;
    while (in >> v) ++count;
    CHECK(count == rep.exceptions.size());
}

TEST_CASE("exception list cap keeps counts exact") {
    const auto full = exceptional_counts(50000, Exponent::rational(13, 10), {.segment_size = 5000});
    const auto capped = exceptional_counts(50000, Exponent::rational(13, 10), {.segment_size = 5000, .exception_cap = 10});
    CHECK(capped.exceptions.size() == 10);
    CHECK(capped.exceptions_truncated);
    CHECK(capped.checkpoints.back().E == full.checkpoints.back().E);
    CHECK(capped.largest_exception == full.largest_exception);
}

TEST_CASE("window finder successes are marked by the scan") {
    const Exponent c = Exponent::rational(21, 20);
    const FloorTable table(300000, c);
    const auto seg = scan_segment(200000, 300000, table);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 200; ++k) {
        const std::uint64_t n = 200001 + rng() % 100000;
        if (find_representation_window(static_cast<i128>(n), c).representation) CHECK(seg.is_achievable(n));
    }
}

TEST_CASE("undecided floors abort segments instead of guessing") {
    // 8^(4/3) = 16 cannot be separated from 16 with a real-valued exponent.
    const Exponent c = Exponent::rational(4, 3).as_real();
    ScanOptions opts{.segment_size = 64, .checkpoints = {10, 15, 100}};
    opts.policy = {.start_bits = 64, .cap_bits = 256};
    const auto rep = exceptional_counts(100, c, opts);
    REQUIRE(!rep.aborted_segments.empty());
    CHECK(rep.aborted_segments.front().first == 0);
    CHECK(rep.checkpoints.back().lower_bound);

    opts.segment_size = 8;
    const auto fine = exceptional_counts(100, c, opts);
    CHECK_FALSE(fine.checkpoints[0].lower_bound);
    CHECK_FALSE(fine.checkpoints[1].lower_bound);
    CHECK(fine.checkpoints[2].lower_bound);
    // Below the undecided value the exact oracle applies.
    const auto ref = oracle_exceptions(0, 15, 4, 3);
    CHECK(fine.checkpoints[1].E == ref.size());
}

TEST_CASE("fit_exponent") {
    std::vector<Checkpoint> sq;
    for (std::uint64_t k = 1; k <= 6; ++k) sq.push_back({static_cast<std::uint64_t>(std::pow(100.0, k)), static_cast<std::uint64_t>(std::pow(10.0, k))});
    REQUIRE(fit_exponent(sq).slope);
    CHECK(std::abs(*fit_exponent(sq).slope - 0.5) < 1e-9);

    const std::vector<Checkpoint> flat{{10, 7}, {100, 7}, {1000, 7}, {10000, 7}};
    CHECK(std::abs(*fit_exponent(flat).slope) < 1e-12);

    const std::vector<Checkpoint> zero{{10, 0}, {100, 0}, {1000, 0}};
    const auto z = fit_exponent(zero);
    CHECK_FALSE(z.slope);
    CHECK(z.note == "exceptional set empty in window");

    const auto windowed = fit_exponent(sq, 1e4, 1e8);
    CHECK(windowed.residuals.size() == 3);
}

TEST_CASE("resume continues a partial scan to the same result") {
    const Exponent c = Exponent::rational(13, 10);
    const std::string path = temp_path("resume.bin");
    std::filesystem::remove(path);
    const auto full = exceptional_counts(60000, c, {.segment_size = 5000});

    ScanOptions opts{.segment_size = 5000, .resume_path = path, .max_segments = 4};
    const auto part = exceptional_counts(60000, c, opts);
    CHECK_FALSE(part.complete());
    CHECK(part.scanned_to == 20000);
    const auto state = load_resume(path);
    CHECK(state.next_lo == 20000);
    CHECK(state.exponent == "13/10");

    opts.max_segments = 0;
    opts.workers = 2;
    const auto rest = exceptional_counts(60000, c, opts);
    REQUIRE(rest.complete());
    CHECK(rest.exceptions == full.exceptions);
    REQUIRE(rest.checkpoints.size() == full.checkpoints.size());
    for (std::size_t k = 0; k < rest.checkpoints.size(); ++k) CHECK(rest.checkpoints[k].E == full.checkpoints[k].E);

    // A resume file for another scan is refused.
    CHECK_THROWS_AS(exceptional_counts(60000, Exponent::rational(6, 5), opts), DomainError);
    std::filesystem::remove(path);
}

TEST_CASE("decade counts for c = 13/10 up to 10^6") {
    const auto rep = exceptional_counts(1000000, Exponent::rational(13, 10), {.workers = 4});
    REQUIRE(rep.complete());
    const std::vector<std::pair<std::uint64_t, std::uint64_t>> golden{
        {10, 3}, {100, 9}, {1000, 12}, {10000, 12}, {100000, 12}, {1000000, 12}};
    REQUIRE(rep.checkpoints.size() == golden.size());
    for (std::size_t k = 0; k < golden.size(); ++k) {
        CHECK(rep.checkpoints[k].x == golden[k].first);
        CHECK(rep.checkpoints[k].E == golden[k].second);
    }
    CHECK(*rep.largest_exception == 498);
}
