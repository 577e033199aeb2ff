#include "pslab/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "pslab/bump.hpp"
#include "pslab/errors.hpp"
#include "pslab/expsum.hpp"
#include "pslab/log.hpp"
#include "pslab/representation.hpp"
#include "pslab/scan.hpp"
#include "pslab/sieve.hpp"

namespace pslab::cli {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

struct OptionSpec {
    const char* key;
    const char* help;
};

const std::vector<OptionSpec> kCommon = {
    {"c", "exponent as p/q or a decimal, 1 <= c < 2"},
    {"precision-cap", "largest working precision in bits (default 4096)"},
    {"workers", "worker threads (default 1)"},
    {"output-dir", "directory for reports (default $PSLAB_OUTPUT_DIR or .)"},
    {"format", "csv or jsonl (default csv)"},
    {"tag", "output file prefix (default: the subcommand)"},
    {"log-level", "debug, info, warn, error or off (default warn)"},
    {"timing", "add wall-time columns to reports (makes them run-dependent)"},
};

const std::map<std::string, std::vector<OptionSpec>> kCommandOptions = {
    {"represent",
     {{"n", "target integer"}, {"method", "window, brute or both (default both)"}}},
    {"scan",
     {{"x-max", "scan (0, x-max]"},
      {"segment-size", "values per segment (default 4194304)"},
      {"checkpoints", "comma-separated x values (default powers of ten and x-max)"},
      {"exception-cap", "exceptions kept in the list (default 1000000)"},
      {"resume", "resume file; continued if present, updated after each batch"},
      {"max-segments", "stop after this many segments (exit 4, partial output)"}}},
    {"expsum",
     {{"x", "X; the range is (X, 5X/4] and n = [2 X^c]"},
      {"n", "target n; X and X1 are derived from it instead of --x"},
      {"h", "single frequency h (with --j); omit both for the (h, j) sweep"},
      {"j", "single frequency j"},
      {"domain", "primes, integers or lambda (single query only, default primes)"},
      {"eps", "epsilon for the sweep grid and target (default 0.005)"},
      {"term-budget", "maximum total terms (default 100000000)"}}},
    {"bilinear",
     {{"M", "m range (M, M1]"}, {"M1", ""}, {"K", "k range (K, K1]"}, {"K1", ""},
      {"x", "constraint X < mk <= X1"}, {"x1", ""},
      {"h", "default 1"}, {"j", "default 1"}, {"n", "default [2 X1^c]"},
      {"a", "family for a_m: zero, constant, mobius, random (default constant)"},
      {"b", "family for b_k (default constant)"},
      {"seed", "seed for random families (default 1)"},
      {"term-budget", "maximum terms (default 100000000)"},
      {"Q", "also evaluate the Weyl shift inequality with this Q"},
      {"eps", "epsilon in Q <= K X^-eps (default 0.005)"}}},
    {"sdelta",
     {{"x", "X"}, {"x1", "X1 (default [5X/4])"}, {"delta", "delta (default X^(1-c))"}}},
    {"fourier",
     {{"window", "phi, psi, phi5, psi5 or majorant (default phi)"},
      {"delta", "delta for psi, psi5 and majorant (default 0.01)"},
      {"eta", "eta for phi5 and psi5 (default 0.05)"},
      {"index", "single coefficient index"},
      {"max-index", "table of indices 0..max-index"},
      {"tolerance", "absolute quadrature tolerance (default 1e-12)"}}},
    {"vaughan",
     {{"x", "X"}, {"x1", "X1 (default [5X/4])"}, {"h", "default 1"}, {"j", "default 1"},
      {"n", "default [2 X^c]"}, {"u", "Lambda cutoff (default [X^1/3])"}, {"v", "Moebius cutoff (default [X^1/3])"}}},
    {"window-census",
     {{"n", "target integer"}, {"variant", "theorem1 or theorem2 (default theorem1)"},
      {"N", "block start for theorem2 (default n)"}}},
};

// ---- value parsing ----

std::string need(const Settings& s, const std::string& key) {
    const auto it = s.find(key);
    if (it == s.end() || it->second.empty()) throw DomainError("missing required option --" + key);
    return it->second;
}

bool has(const Settings& s, const std::string& key) { return s.count(key) && !s.at(key).empty(); }

// Integers, optionally written as <digits>e<digits> when the value is exact.
i128 parse_int(const std::string& key, const std::string& text) {
    const auto bad = [&] { return DomainError("--" + key + ": '" + text + "' is not an integer"); };
    std::string t = text;
    int exp10 = 0;
    if (const auto e = t.find_first_of("eE"); e != std::string::npos) {
        const std::string ex = t.substr(e + 1);
        if (ex.empty() || ex.find_first_not_of("0123456789") != std::string::npos) throw bad();
        exp10 = std::stoi(ex);
        t = t.substr(0, e);
    }
    bool neg = false;
    if (!t.empty() && (t[0] == '-' || t[0] == '+')) {
        neg = t[0] == '-';
        t = t.substr(1);
    }
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos || t.size() > 30 || exp10 > 30) throw bad();
    i128 v = 0;
    for (const char ch : t) v = v * 10 + (ch - '0');
    for (int k = 0; k < exp10; ++k) {
        if (v > (static_cast<i128>(1) << 120) / 10) throw bad();
        v *= 10;
    }
    return neg ? -v : v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    const i128 v = parse_int(key, text);
    if (v < 0 || v > static_cast<i128>(UINT64_MAX)) throw DomainError("--" + key + " out of range");
    return static_cast<std::uint64_t>(v);
}

std::int64_t parse_i64(const std::string& key, const std::string& text) {
    const i128 v = parse_int(key, text);
    if (v < INT64_MIN || v > INT64_MAX) throw DomainError("--" + key + " out of range");
    return static_cast<std::int64_t>(v);
}

double parse_real(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
        throw DomainError("--" + key + ": '" + text + "' is not a finite number");
    return v;
}

std::uint64_t get_u64(const Settings& s, const std::string& key, std::uint64_t def) {
    return has(s, key) ? parse_u64(key, s.at(key)) : def;
}
std::int64_t get_i64(const Settings& s, const std::string& key, std::int64_t def) {
    return has(s, key) ? parse_i64(key, s.at(key)) : def;
}
double get_real(const Settings& s, const std::string& key, double def) {
    return has(s, key) ? parse_real(key, s.at(key)) : def;
}
std::string get_str(const Settings& s, const std::string& key, const std::string& def) {
    return has(s, key) ? s.at(key) : def;
}

Exponent parse_c(const Settings& s) {
    const Exponent c = Exponent::parse(need(s, "c"));
    // c = 1 is kept for the degenerate sanity checks; everything else must satisfy 1 < c < 2.
    if (c.approx() < 1.0 || (c.approx() == 1.0 && !c.is_one()))
        throw DomainError("--c " + c.to_string() + " violates 1 < c < 2 (c = 1 is accepted only as a degenerate check)");
    if (c.approx() >= 2.0) throw DomainError("--c " + c.to_string() + " violates c < 2");
    return c;
}

PrecisionPolicy policy_of(const Settings& s) {
    PrecisionPolicy p;
    p.cap_bits = static_cast<int>(get_u64(s, "precision-cap", 4096));
    if (p.cap_bits < p.start_bits || p.cap_bits > 1 << 20)
        throw DomainError("--precision-cap must lie in [" + std::to_string(p.start_bits) + ", 1048576]");
    return p;
}

unsigned workers_of(const Settings& s) {
    const std::uint64_t w = get_u64(s, "workers", 1);
    if (w < 1 || w > 1024) throw DomainError("--workers must lie in [1, 1024]");
    return static_cast<unsigned>(w);
}

// ---- report tables ----

std::string fmt_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;

    void add(std::vector<json> row) {
        row.insert(row.begin(), kSchemaVersion);
        rows.push_back(std::move(row));
    }
};

Table make_table(std::vector<std::string> cols) {
    cols.insert(cols.begin(), "schema_version");
    return {std::move(cols), {}};
}

std::string cell(const json& v) {
    if (v.is_number_float()) return fmt_double(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return "";
    return v.dump();
}

json i128_json(i128 v) {
    if (v >= INT64_MIN && v <= INT64_MAX) return static_cast<std::int64_t>(v);
    return to_string(v);
}

class Writer {
public:
    Writer(const Settings& s, std::string command)
        : dir_(get_str(s, "output-dir", ".")), tag_(get_str(s, "tag", command)),
          format_(get_str(s, "format", "csv")) {
        if (format_ != "csv" && format_ != "jsonl") throw DomainError("--format must be csv or jsonl");
        if (tag_.empty() || tag_.find('/') != std::string::npos) throw DomainError("--tag must be a plain name");
        fs::create_directories(dir_);
    }

    std::string table(const std::string& suffix, const Table& t) {
        const std::string path = path_for(suffix + (format_ == "csv" ? ".csv" : ".jsonl"));
        std::ofstream os(path, std::ios::trunc);
        if (!os) throw DomainError("cannot write " + path);
        if (format_ == "csv") {
            for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
            os << '\n';
            for (const auto& row : t.rows) {
                for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << cell(row[k]);
                os << '\n';
            }
        } else {
            for (const auto& row : t.rows) {
                json obj = json::object();
                for (std::size_t k = 0; k < row.size(); ++k) obj[t.columns[k]] = row[k];
                os << obj.dump() << '\n';
            }
        }
        outputs_.push_back(path);
        return path;
    }

    std::string text(const std::string& suffix, const std::string& body) {
        const std::string path = path_for(suffix);
        std::ofstream os(path, std::ios::trunc);
        if (!os) throw DomainError("cannot write " + path);
        os << body;
        outputs_.push_back(path);
        return path;
    }

    std::string path_for(const std::string& suffix) const { return (fs::path(dir_) / (tag_ + suffix)).string(); }
    const std::vector<std::string>& outputs() const { return outputs_; }

private:
    std::string dir_, tag_, format_;
    std::vector<std::string> outputs_;
};

// Per-module wall times, reported only in the manifest.
struct Timer {
    json timings = json::object();
    template <typename Fn>
    auto time(const std::string& module, Fn&& fn) {
        const auto t0 = Clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            add(module, t0);
        } else {
            auto r = fn();
            add(module, t0);
            return r;
        }
    }
    void add(const std::string& module, Clock::time_point t0) {
        const double s = std::chrono::duration<double>(Clock::now() - t0).count();
        timings[module] = timings.value(module, 0.0) + s;
    }
};

struct Context {
    const Settings& s;
    Writer& out;
    Timer& timer;
    std::ostream& console;
    bool partial = false;
};

// ---- subcommands ----

std::string rep_text(const std::optional<Representation>& r) {
    if (!r) return "none";
    return "m=" + to_string(r->m) + " p=" + to_string(r->p);
}

void cmd_represent(Context& ctx) {
    const Exponent c = parse_c(ctx.s);
    const PrecisionPolicy pol = policy_of(ctx.s);
    const i128 n = parse_int("n", need(ctx.s, "n"));
    if (n < 1) throw DomainError("--n must be positive");
    const std::string method = get_str(ctx.s, "method", "both");
    if (method != "window" && method != "brute" && method != "both")
        throw DomainError("--method must be window, brute or both");
    Table t = make_table({"n", "c", "method", "found", "m", "p", "verified", "note"});
    std::optional<Representation> w, b;
    if (method != "brute") {
        std::string note;
        if (n < 4 || c.is_one()) {
            note = "window criterion needs n >= 4 and c > 1";
        } else {
            const WindowSearch ws = ctx.timer.time("representation-core", [&] { return find_representation_window(n, c, pol); });
            w = ws.representation;
            note = "in=" + std::to_string(ws.tally.in) + ";out=" + std::to_string(ws.tally.out) +
                   ";uncertain=" + std::to_string(ws.tally.uncertain);
        }
        if (w) w->verified = verify_representation(n, w->m, w->p, c, pol);
        t.add({i128_json(n), c.to_string(), "window", w.has_value(), w ? i128_json(w->m) : json(), w ? i128_json(w->p) : json(),
               w ? json(w->verified) : json(), note});
        ctx.console << "window: " << rep_text(w) << '\n';
    }
    if (method != "window") {
        b = ctx.timer.time("representation-core", [&] { return find_representation_bruteforce(n, c, pol); });
        if (b) b->verified = verify_representation(n, b->m, b->p, c, pol);
        t.add({i128_json(n), c.to_string(), "brute", b.has_value(), b ? i128_json(b->m) : json(), b ? i128_json(b->p) : json(),
               b ? json(b->verified) : json(), ""});
        ctx.console << "brute: " << rep_text(b) << '\n';
    }
    if (method == "both") {
        const bool consistent = !(w && !b);
        ctx.console << "agreement: " << (consistent ? "consistent" : "window found a pair the brute force missed") << '\n';
        if (!consistent) throw Error(ExitCode::indeterminate, "window and brute-force finders disagree");
    }
    ctx.out.table("", t);
}

void cmd_scan(Context& ctx) {
    const Exponent c = parse_c(ctx.s);
    ScanOptions opts;
    opts.policy = policy_of(ctx.s);
    opts.workers = workers_of(ctx.s);
    opts.segment_size = get_u64(ctx.s, "segment-size", kDefaultSegmentSize);
    opts.exception_cap = static_cast<std::size_t>(get_u64(ctx.s, "exception-cap", kDefaultExceptionCap));
    opts.resume_path = get_str(ctx.s, "resume", "");
    opts.max_segments = get_u64(ctx.s, "max-segments", 0);
    const std::uint64_t x_max = parse_u64("x-max", need(ctx.s, "x-max"));
    if (has(ctx.s, "checkpoints")) {
        std::stringstream ss(ctx.s.at("checkpoints"));
        std::string item;
        while (std::getline(ss, item, ',')) opts.checkpoints.push_back(parse_u64("checkpoints", item));
    }
    const ScanReport rep = ctx.timer.time("exceptional-scan", [&] { return exceptional_counts(x_max, c, opts); });

    Table t = make_table({"x", "E", "density", "fitted_slope_so_far", "lower_bound"});
    for (std::size_t k = 0; k < rep.checkpoints.size(); ++k) {
        const auto& cp = rep.checkpoints[k];
        const SlopeFit f = fit_exponent({rep.checkpoints.begin(), rep.checkpoints.begin() + static_cast<std::ptrdiff_t>(k) + 1});
        t.add({cp.x, cp.E, static_cast<double>(cp.E) / static_cast<double>(cp.x), f.slope ? json(*f.slope) : json(),
               cp.lower_bound});
    }
    ctx.out.table("_checkpoints", t);
    std::ostringstream list;
    write_exceptions(list, rep);
    ctx.out.text("_exceptions.txt", list.str());

    json summary = json::object();
    summary["schema_version"] = kSchemaVersion;
    summary["c"] = c.to_string();
    summary["x_max"] = x_max;
    summary["scanned_to"] = rep.scanned_to;
    summary["complete"] = rep.complete();
    summary["E"] = rep.checkpoints.empty() ? 0 : rep.checkpoints.back().E;
    summary["largest_exception"] = rep.largest_exception ? json(*rep.largest_exception) : json();
    summary["exceptions_truncated"] = rep.exceptions_truncated;
    summary["aborted_segments"] = rep.aborted_segments;
    summary["fitted_slope"] = rep.fit.slope ? json(*rep.fit.slope) : json();
    summary["fit_note"] = rep.fit.note;
    summary["theorem2_exponent"] = rep.theorem2_exponent;
    summary["slope_note"] =
        "The fitted slope is reported next to 3(1 - 1/c) for comparison only. Theorem 2 is an asymptotic upper "
        "bound and is not asserted at this scale.";
    ctx.out.text("_summary.json", summary.dump(2) + "\n");

    ctx.console << "E(" << rep.scanned_to << ") = " << summary["E"] << ", largest exception "
                << (rep.largest_exception ? std::to_string(*rep.largest_exception) : "none") << ", fitted slope "
                << (rep.fit.slope ? fmt_double(*rep.fit.slope) : rep.fit.note) << ", 3(1-1/c) = "
                << fmt_double(rep.theorem2_exponent) << '\n';
    if (!rep.complete()) {
        ctx.partial = true;
        throw BudgetError("scan stopped at " + std::to_string(rep.scanned_to) + " after --max-segments; output is partial");
    }
}

std::pair<std::uint64_t, std::uint64_t> range_from(const Settings& s, const Exponent& c, i128* n_out) {
    if (has(s, "n")) {
        const i128 n = parse_int("n", s.at("n"));
        DeriveOptions d;
        d.allow_degenerate_exponent = c.is_one();
        *n_out = n;
        return integer_range(derive_params(n, c, d));
    }
    const std::uint64_t X = parse_u64("x", need(s, "x"));
    if (X < 8) throw DomainError("--x must be >= 8");
    *n_out = target_for(X, c);
    return {X, 5 * X / 4};
}

void cmd_expsum(Context& ctx) {
    const Exponent c = parse_c(ctx.s);
    const PrecisionPolicy pol = policy_of(ctx.s);
    const unsigned workers = workers_of(ctx.s);
    const double eps = get_real(ctx.s, "eps", 0.005);
    const std::uint64_t budget = get_u64(ctx.s, "term-budget", kDefaultTermBudget);
    const bool timing = has(ctx.s, "timing");
    i128 n = 0;
    const auto [X, X1] = range_from(ctx.s, c, &n);

    std::vector<std::string> cols = {"kind", "X", "X1", "n", "c", "eps", "h", "j", "H", "J", "delta0", "measured", "bound",
                                     "ratio", "terms", "max_phase_error"};
    if (timing) cols.push_back("seconds");
    Table t = make_table(cols);
    const double Xd = static_cast<double>(X);
    const double target = std::pow(Xd, 2.0 - c.approx() - 3.0 * eps);
    if (has(ctx.s, "h") || has(ctx.s, "j")) {
        ExpSumQuery q;
        q.h = get_i64(ctx.s, "h", 0);
        q.j = get_i64(ctx.s, "j", 0);
        q.n = n;
        q.c = c;
        q.lo = X;
        q.hi = X1;
        const std::string dom = get_str(ctx.s, "domain", "primes");
        if (dom == "primes") q.domain = SumDomain::primes;
        else if (dom == "integers") q.domain = SumDomain::integers;
        else if (dom == "lambda") q.domain = SumDomain::lambda_weighted;
        else throw DomainError("--domain must be primes, integers or lambda");
        if (X1 - X > budget) throw BudgetError("expsum: range exceeds --term-budget");
        const auto t0 = Clock::now();
        const ExpSumResult r = ctx.timer.time("expsum-lab", [&] {
            const PhaseTable table(X, X1, n, c, q.j != 0, pol, workers);
            return exp_sum(q, table);
        });
        std::vector<json> row = {"exp_sum_" + dom, X, X1, i128_json(n), c.to_string(), eps, q.h, q.j, json(), json(), json(),
                                 std::abs(r.value), target, std::abs(r.value) / target, r.terms, r.max_phase_error};
        if (timing) row.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
        t.add(row);
        ctx.console << "S = " << fmt_double(r.value.real()) << (r.value.imag() < 0 ? " - " : " + ")
                    << fmt_double(std::abs(r.value.imag())) << "i, |S| = " << fmt_double(std::abs(r.value)) << " over "
                    << r.terms << " terms\n";
    } else {
        const double H = std::floor(std::pow(Xd, eps)), J = std::floor(std::pow(Xd, c.approx() - 1.0 + eps));
        if ((2 * H + 1) * (2 * J + 1) * static_cast<double>(X1 - X) > static_cast<double>(budget))
            throw BudgetError("expsum sweep: grid times range exceeds --term-budget");
        const auto rows = ctx.timer.time("expsum-lab", [&] { return bound_sweep(X, c, eps, pol, workers); });
        double worst = 0.0;
        for (const auto& r : rows) {
            std::map<std::string, double> p(r.params.begin(), r.params.end());
            std::vector<json> row = {r.kind, X, X1, i128_json(n), c.to_string(), eps, static_cast<std::int64_t>(p["h"]),
                                     static_cast<std::int64_t>(p["j"]), static_cast<std::int64_t>(p["H"]),
                                     static_cast<std::int64_t>(p["J"]), p["delta0"], r.measured, r.bound, r.ratio, r.terms,
                                     p["max_phase_error"]};
            if (timing) row.push_back(r.seconds);
            t.add(row);
            worst = std::max(worst, r.ratio);
        }
        ctx.console << rows.size() << " grid points, max |S| / X^(2-c-3eps) = " << fmt_double(worst) << '\n';
    }
    ctx.out.table("", t);
}

void cmd_bilinear(Context& ctx) {
    const Exponent c = parse_c(ctx.s);
    const PrecisionPolicy pol = policy_of(ctx.s);
    BilinearQuery q;
    q.M = parse_u64("M", need(ctx.s, "M"));
    q.M1 = parse_u64("M1", need(ctx.s, "M1"));
    q.K = parse_u64("K", need(ctx.s, "K"));
    q.K1 = parse_u64("K1", need(ctx.s, "K1"));
    q.X = parse_u64("x", need(ctx.s, "x"));
    q.X1 = parse_u64("x1", need(ctx.s, "x1"));
    q.h = get_i64(ctx.s, "h", 1);
    q.j = get_i64(ctx.s, "j", 1);
    q.c = c;
    q.n = has(ctx.s, "n") ? parse_int("n", ctx.s.at("n")) : target_for(q.X1, c);
    q.a = parse_family(get_str(ctx.s, "a", "constant"));
    q.b = parse_family(get_str(ctx.s, "b", "constant"));
    q.seed = get_u64(ctx.s, "seed", 1);
    q.term_budget = get_u64(ctx.s, "term-budget", kDefaultTermBudget);
    std::vector<std::string> cols = {"M", "M1", "K", "K1", "X", "X1", "h", "j", "n", "c", "a", "b", "seed", "real", "imag", "abs",
                                     "terms"};
    const bool weyl = has(ctx.s, "Q");
    if (weyl)
        for (const char* k : {"Q", "eps", "lhs", "rhs_standard", "rhs_explicit", "fitted_constant", "g3_ratio_min",
                              "g3_ratio_max", "delta0"})
            cols.emplace_back(k);
    Table t = make_table(cols);
    const BilinearResult r = ctx.timer.time("expsum-lab", [&] { return bilinear_sum(q, pol); });
    std::vector<json> row = {q.M, q.M1, q.K, q.K1, q.X, q.X1, q.h, q.j, i128_json(q.n), c.to_string(), family_name(q.a),
                             family_name(q.b), q.seed, r.value.real(), r.value.imag(), std::abs(r.value), r.terms};
    ctx.console << "|sum| = " << fmt_double(std::abs(r.value)) << " over " << r.terms << " terms\n";
    if (weyl) {
        const std::uint64_t Q = parse_u64("Q", ctx.s.at("Q"));
        const double eps = get_real(ctx.s, "eps", 0.005);
        const WeylReport w = ctx.timer.time("expsum-lab", [&] { return weyl_shift_sum(q, Q, eps, pol); });
        for (const json& v : {json(Q), json(eps), json(w.lhs), json(w.rhs_standard), json(w.rhs_explicit), json(w.fitted_constant),
                             json(w.g3_ratio_min), json(w.g3_ratio_max), json(w.delta0)})
            row.push_back(v);
        ctx.console << "Weyl: |sum|^2 = " << fmt_double(w.lhs) << ", standard form " << fmt_double(w.rhs_standard)
                    << ", explicit form " << fmt_double(w.rhs_explicit) << '\n';
    }
    t.add(row);
    ctx.out.table("", t);
}

void cmd_sdelta(Context& ctx) {
    const Exponent c = parse_c(ctx.s);
    const std::uint64_t X = parse_u64("x", need(ctx.s, "x"));
    const std::uint64_t X1 = get_u64(ctx.s, "x1", 5 * X / 4);
    const double delta = get_real(ctx.s, "delta", std::pow(static_cast<double>(X), 1.0 - c.approx()));
    const SDeltaReport r = ctx.timer.time("expsum-lab", [&] {
        return sdelta_count(X, X1, c, delta, policy_of(ctx.s), workers_of(ctx.s));
    });
    Table t = make_table({"X", "X1", "c", "delta", "count", "undecided", "bound", "ratio"});
    t.add({X, X1, c.to_string(), delta, r.count, r.undecided, r.bound, r.ratio});
    ctx.out.table("", t);
    ctx.console << "count = " << r.count << " (undecided " << r.undecided << "), bound formula " << fmt_double(r.bound)
                << ", ratio " << fmt_double(r.ratio) << '\n';
}

void cmd_fourier(Context& ctx) {
    const std::string name = get_str(ctx.s, "window", "phi");
    const double delta = get_real(ctx.s, "delta", 0.01);
    const double eta = get_real(ctx.s, "eta", 0.05);
    const PeriodicWindow w = [&] {
        if (name == "phi") return PeriodicWindow::phi_section2();
        if (name == "psi") return PeriodicWindow::psi_section2(delta);
        if (name == "phi5") return PeriodicWindow::phi_section5(eta);
        if (name == "psi5") return PeriodicWindow::psi_section5(delta, eta);
        if (name == "majorant") return PeriodicWindow::lemma4_majorant(delta);
        throw DomainError("--window must be phi, psi, phi5, psi5 or majorant");
    }();
    QuadratureOptions q;
    q.tolerance = get_real(ctx.s, "tolerance", 1e-12);
    Table t = make_table({"window", "index", "real", "imag", "error_bound"});
    if (has(ctx.s, "index")) {
        const std::int64_t m = parse_i64("index", ctx.s.at("index"));
        const Coefficient cf = ctx.timer.time("bump-fourier", [&] { return fourier_coeff(w, m, q); });
        t.add({w.name(), m, cf.value.real(), cf.value.imag(), cf.error});
        ctx.console << w.name() << "^(" << m << ") = " << fmt_double(cf.value.real())
                    << (cf.value.imag() < 0 ? " - " : " + ") << fmt_double(std::abs(cf.value.imag())) << "i  (error <= "
                    << fmt_double(cf.error) << ")\n";
    } else {
        const std::int64_t M = get_i64(ctx.s, "max-index", 0);
        if (M < 0) throw DomainError("--max-index must be >= 0");
        const FourierTable table = ctx.timer.time("bump-fourier", [&] { return FourierTable(w, M, q); });
        for (std::int64_t m = 0; m <= M; ++m) {
            const Coefficient cf = table.at(m);
            t.add({w.name(), m, cf.value.real(), cf.value.imag(), cf.error});
        }
        ctx.console << "wrote " << (M + 1) << " coefficients, max error " << fmt_double(table.max_error()) << '\n';
    }
    ctx.out.table("", t);
}

const char* type_name(VaughanComponent::Type t) {
    switch (t) {
    case VaughanComponent::Type::type1_log: return "type1_log";
    case VaughanComponent::Type::type1: return "type1";
    case VaughanComponent::Type::type2: return "type2";
    }
    return "?";
}

void cmd_vaughan(Context& ctx) {
    const Exponent c = parse_c(ctx.s);
    const std::uint64_t X = parse_u64("x", need(ctx.s, "x"));
    const std::uint64_t X1 = get_u64(ctx.s, "x1", 5 * X / 4);
    const std::int64_t h = get_i64(ctx.s, "h", 1), j = get_i64(ctx.s, "j", 1);
    const i128 n = has(ctx.s, "n") ? parse_int("n", ctx.s.at("n")) : target_for(X, c);
    const auto third = static_cast<std::uint64_t>(std::cbrt(static_cast<double>(X)) + 1e-9);
    const std::uint64_t u = get_u64(ctx.s, "u", third), v = get_u64(ctx.s, "v", third);
    const VaughanResult r = ctx.timer.time("expsum-lab", [&] {
        return vaughan_decompose(X, X1, h, j, n, c, u, v, policy_of(ctx.s), workers_of(ctx.s));
    });
    Table t = make_table({"kind", "M", "M1", "K", "K1", "real", "imag", "X", "X1", "h", "j", "n", "c", "u", "v"});
    const auto tail = [&](std::vector<json> row) {
        for (const json& x : {json(X), json(X1), json(h), json(j), i128_json(n), json(c.to_string()), json(u), json(v)})
            row.push_back(x);
        t.add(row);
    };
    for (const auto& comp : r.components)
        tail({type_name(comp.type), comp.M, comp.M1, comp.K, comp.K1, comp.value.real(), comp.value.imag()});
    tail({"direct", json(), json(), json(), json(), r.direct.real(), r.direct.imag()});
    tail({"recombined", json(), json(), json(), json(), r.recombined.real(), r.recombined.imag()});
    tail({"discrepancy", json(), json(), json(), json(), r.discrepancy(), 0.0});
    ctx.out.table("", t);
    ctx.console << r.components.size() << " components, |recombined - direct| = " << fmt_double(r.discrepancy()) << '\n';
}

void cmd_window_census(Context& ctx) {
    const Exponent c = parse_c(ctx.s);
    const PrecisionPolicy pol = policy_of(ctx.s);
    const i128 n = parse_int("n", need(ctx.s, "n"));
    const std::string variant = get_str(ctx.s, "variant", "theorem1");
    DeriveOptions d;
    d.allow_degenerate_exponent = c.is_one();
    d.policy = pol;
    ProblemParams params;
    if (variant == "theorem1") params = derive_params(n, c, d);
    else if (variant == "theorem2") params = derive_params_theorem2(n, has(ctx.s, "N") ? parse_int("N", ctx.s.at("N")) : n, c, d);
    else throw DomainError("--variant must be theorem1 or theorem2");
    const WindowTally tally = ctx.timer.time("representation-core", [&] {
        return count_window_primes(params, WindowSpec::for_params(params), pol);
    });
    Table t = make_table({"n", "c", "variant", "X", "X1", "in", "out", "uncertain"});
    t.add({i128_json(n), c.to_string(), variant, params.X.mid(), params.X1.mid(), tally.in, tally.out, tally.uncertain});
    ctx.out.table("", t);
    ctx.console << "in=" << tally.in << " out=" << tally.out << " uncertain=" << tally.uncertain << '\n';
}

const std::map<std::string, std::string> kDescriptions = {
    {"represent", "find n = [m^c] + [p^c] by the window criterion and by brute force"},
    {"scan", "exceptional set E_c(x) over (0, x-max] with decade checkpoints"},
    {"expsum", "prime exponential sums against X^(2-c-3eps)"},
    {"bilinear", "type II bilinear sums and the Weyl shift inequality"},
    {"sdelta", "count x in (X, X1] with ||x^c|| < delta"},
    {"fourier", "Fourier coefficients of the smooth windows"},
    {"vaughan", "Vaughan decomposition of a Lambda-weighted sum"},
    {"window-census", "In/Out/Uncertain tally of primes in (X, X1] for n"},
};

using Handler = void (*)(Context&);
const std::map<std::string, Handler> kHandlers = {
    {"represent", cmd_represent}, {"scan", cmd_scan},       {"expsum", cmd_expsum},   {"bilinear", cmd_bilinear},
    {"sdelta", cmd_sdelta},       {"fourier", cmd_fourier}, {"vaughan", cmd_vaughan}, {"window-census", cmd_window_census},
};

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void validate_keys(const RunConfig& cfg) {
    std::set<std::string> allowed;
    for (const auto& o : kCommon) allowed.insert(o.key);
    for (const auto& o : kCommandOptions.at(cfg.command)) allowed.insert(o.key);
    for (const auto& [k, v] : cfg.settings)
        if (!allowed.count(k)) throw DomainError("option --" + k + " is not accepted by '" + cfg.command + "'");
}

} // namespace

const std::vector<std::string>& commands() {
    static const std::vector<std::string> names = {"represent", "scan", "expsum", "bilinear", "sdelta", "fourier",
                                                   "vaughan", "window-census"};
    return names;
}

Settings parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot read config file " + path);
    Settings s;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        const auto trim = [](std::string x) {
            const auto b = x.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            return x.substr(b, x.find_last_not_of(" \t\r") - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DomainError(path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.rfind("--", 0) == 0) key = key.substr(2);
        s[key] = trim(line.substr(eq + 1));
    }
    return s;
}

RunConfig load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot read manifest " + path);
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        throw DomainError("manifest " + path + " is not valid JSON: " + e.what());
    }
    if (!m.contains("command") || !m.contains("config")) throw DomainError("manifest " + path + " lacks command/config");
    RunConfig cfg;
    cfg.command = m["command"].get<std::string>();
    for (const auto& [k, v] : m["config"].items()) cfg.settings[k] = v.get<std::string>();
    return cfg;
}

RunResult run(const RunConfig& config) {
    RunResult result;
    RunConfig cfg = config;
    const auto started = utc_now();
    const auto t0 = Clock::now();
    Timer timer;
    reset_event_counts();
    std::ostringstream console;
    std::unique_ptr<Writer> writer;
    bool partial = false;
    try {
        if (!kHandlers.count(cfg.command)) throw DomainError("unknown subcommand '" + cfg.command + "'");
        if (!has(cfg.settings, "output-dir")) {
            const char* env = std::getenv("PSLAB_OUTPUT_DIR");
            cfg.settings["output-dir"] = env && *env ? env : ".";
        }
        validate_keys(cfg);
        if (has(cfg.settings, "log-level")) set_log_level(parse_log_level(cfg.settings.at("log-level")));
        writer = std::make_unique<Writer>(cfg.settings, cfg.command);
        Context ctx{cfg.settings, *writer, timer, console};
        try {
            kHandlers.at(cfg.command)(ctx);
        } catch (...) {
            partial = ctx.partial;
            throw;
        }
        result.exit_code = 0;
    } catch (const Error& e) {
        result.exit_code = static_cast<int>(e.code());
        console << "error: " << e.what() << '\n';
    } catch (const CLI::Error& e) {
        result.exit_code = static_cast<int>(ExitCode::invalid_config);
        console << "error: " << e.what() << '\n';
    } catch (const std::bad_alloc&) {
        result.exit_code = static_cast<int>(ExitCode::budget_exceeded);
        console << "error: out of memory\n";
    } catch (const std::exception& e) {
        result.exit_code = static_cast<int>(ExitCode::invalid_config);
        console << "error: " << e.what() << '\n';
    }
    result.message = console.str();
    if (!writer) return result;  // nothing was written; no manifest without a usable output directory

    result.outputs = writer->outputs();
    json m = json::object();
    m["tool"] = "pslab";
    m["version"] = kToolVersion;
    m["schema_version"] = kSchemaVersion;
    m["command"] = cfg.command;
    m["config"] = cfg.settings;
    m["started"] = started;
    m["finished"] = utc_now();
    timer.timings["total"] = std::chrono::duration<double>(Clock::now() - t0).count();
    m["timing_seconds"] = timer.timings;
    const EventCounts ev = event_counts();
    m["precision_events"] = {{"escalations", ev.escalations}, {"indeterminate", ev.indeterminate}, {"uncertain", ev.uncertain}};
    json outs = json::array();
    for (const auto& p : result.outputs) outs.push_back(fs::path(p).filename().string());
    m["outputs"] = outs;
    m["exit_code"] = result.exit_code;
    m["partial"] = partial;
    m["message"] = result.message;
    result.manifest = writer->path_for(".manifest.json");
    std::ofstream os(result.manifest, std::ios::trunc);
    os << m.dump(2) << '\n';
    return result;
}

int main_entry(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for [m^c] + [p^c] = n"};
    app.require_subcommand(0, 1);
    app.fallthrough();
    app.set_help_flag("--help", "Print this help message and exit");
    std::string config_file, manifest_file;
    app.add_option("--config", config_file, "key = value file; flags override it");
    app.add_option("--from-manifest", manifest_file, "replay the command and config of a manifest; flags override it");

    std::map<std::string, std::string> common_values;
    std::map<std::string, CLI::Option*> common_opts;
    for (const auto& o : kCommon) {
        if (std::string(o.key) == "timing")
            common_opts[o.key] = app.add_flag("--timing", o.help);
        else
            common_opts[o.key] = app.add_option(std::string("--") + o.key, common_values[o.key], o.help);
    }
    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::map<std::string, CLI::Option*>> opts;
    std::map<std::string, CLI::App*> subs;
    for (const auto& name : commands()) {
        CLI::App* sub = app.add_subcommand(name, kDescriptions.at(name));
        sub->set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
        subs[name] = sub;
        for (const auto& o : kCommandOptions.at(name))
            opts[name][o.key] = sub->add_option(std::string("--") + o.key, values[name][o.key], o.help);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ExitCode::invalid_config);
    }

    RunConfig cfg;
    try {
        if (!manifest_file.empty()) cfg = load_manifest(manifest_file);
        if (!config_file.empty())
            for (const auto& [k, v] : parse_config_file(config_file)) cfg.settings[k] = v;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.code());
    }
    for (const auto& [name, sub] : subs)
        if (sub->parsed()) {
            cfg.command = name;
            for (const auto& [k, opt] : opts[name])
                if (opt->count() > 0) cfg.settings[k] = values[name][k];
        }
    for (const auto& [k, opt] : common_opts)
        if (opt->count() > 0) cfg.settings[k] = k == "timing" ? "1" : common_values[k];
    if (cfg.command.empty()) {
        std::cerr << app.help();
        return static_cast<int>(ExitCode::invalid_config);
    }
    const RunResult r = run(cfg);
    (r.exit_code == 0 ? std::cout : std::cerr) << r.message;
    return r.exit_code;
}

} // namespace pslab::cli
