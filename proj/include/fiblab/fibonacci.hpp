#pragma once

#include "map.hpp"

#include <optional>
#include <string>

namespace fiblab {

using FibSchedule = std::vector<long>;

inline FibSchedule fibonacci_times(int N)
{
    if (N < 0)
        throw std::invalid_argument("fibonacci_times: N < 0");
    FibSchedule S{1, 2};
    while (static_cast<int>(S.size()) < N + 1)
        S.push_back(S[S.size() - 1] + S[S.size() - 2]);
    S.resize(static_cast<size_t>(N) + 1);
    return S;
}

struct ClosestReturn {
    long time;
    Real distance;
    int side; // sign of f^t(0)
};

struct ClosestReturnTrace {
    std::vector<ClosestReturn> entries;
    bool escaped = false;
    long escape_time = -1;
};

// Times t <= maxTime at which |f^t(0)| beats every earlier positive time.
inline ClosestReturnTrace closest_returns(const MapParams& p, long maxTime)
{
    WorkingPrecision wp(p.precision.mantissa_bits);
    ClosestReturnTrace tr;
    Stepper s(p);
    s.load(Real(0));
    mpfr_t best, a;
    mpfr_init2(best, p.precision.mantissa_bits);
    mpfr_init2(a, p.precision.mantissa_bits);
    mpfr_set_inf(best, 1);
    for (long t = 1; t <= maxTime; ++t) {
        s.step();
        if (s.escaped()) {
            tr.escaped = true;
            tr.escape_time = t;
            break;
        }
        mpfr_abs(a, s.raw(), MPFR_RNDN);
        if (mpfr_less_p(a, best)) {
            mpfr_set(best, a, MPFR_RNDN);
            Real d;
            mpfr_set(d.backend().data(), a, MPFR_RNDN);
            tr.entries.push_back({t, d, s.sign()});
            if (mpfr_zero_p(a))
                break; // periodic critical orbit: nothing later can come closer
        }
    }
    mpfr_clears(best, a, static_cast<mpfr_ptr>(nullptr));
    return tr;
}

enum class ViolationKind { ExtraReturn, MissingReturn };

inline const char* to_string(ViolationKind k)
{
    return k == ViolationKind::ExtraReturn ? "extra-return" : "missing-return";
}

struct Violation {
    long time;
    ViolationKind kind;
    Real distance;
};

struct FibVerdict {
    int depth_certified = 0; // largest M <= N with the closest returns up to S_M exact
    bool ok = false;
    std::optional<Violation> first_violation;
};

// ok iff the closest-return times up to S_N are exactly {S_0..S_N}. A landing within
// abs_tol of 0 is a violation (an exact landing means the orbit is periodic).
inline FibVerdict check_fibonacci(const MapParams& p, int N)
{
    FibVerdict v;
    if (N < 0)
        N = 0;
    FibSchedule S = fibonacci_times(N);
    long maxT = S.back();
    ClosestReturnTrace tr = closest_returns(p, maxT);

    size_t k = 0;
    for (const auto& e : tr.entries) {
        if (e.distance < p.precision.abs_tol) {
            v.first_violation = Violation{e.time, ViolationKind::ExtraReturn, e.distance};
            break;
        }
        if (k < S.size() && e.time == S[k]) {
            v.depth_certified = static_cast<int>(k);
            ++k;
            continue;
        }
        if (k < S.size() && e.time > S[k])
            v.first_violation = Violation{S[k], ViolationKind::MissingReturn, Real(-1)};
        else
            v.first_violation = Violation{e.time, ViolationKind::ExtraReturn, e.distance};
        break;
    }
    if (!v.first_violation && k < S.size()) {
        long t = tr.escaped ? tr.escape_time : S[k];
        v.first_violation = Violation{t, tr.escaped ? ViolationKind::ExtraReturn : ViolationKind::MissingReturn, Real(-1)};
    }
    if (v.first_violation && k == 0)
        v.depth_certified = -1;
    v.ok = !v.first_violation.has_value();
    if (v.ok)
        v.depth_certified = N;
    return v;
}

// Itinerary of the Fibonacci model up to time length: symbol t-1 is the side of f^t(0).
// Built in the max-map convention (kneading map Q(k) = max(k-2, 0)) and flipped, since
// z^l + c with c < 0 has a minimum at 0.
inline std::string target_kneading_length(long length)
{
    std::vector<long> S{1, 2};
    while (S.back() < length)
        S.push_back(S[S.size() - 1] + S[S.size() - 2]);
    std::vector<char> nu{0, 1}; // 1-based
    for (long k = 1; static_cast<long>(nu.size()) - 1 < length; ++k) {
        long sq = S[static_cast<size_t>(std::max(k - 2, 0L))];
        for (long j = 1; j < sq; ++j)
            nu.push_back(nu[static_cast<size_t>(j)]);
        nu.push_back(static_cast<char>(1 - nu[static_cast<size_t>(sq)]));
    }
    std::string out;
    out.reserve(static_cast<size_t>(length));
    for (long t = 1; t <= length; ++t)
        out.push_back(nu[static_cast<size_t>(t)] ? 'L' : 'R');
    return out;
}

inline std::string target_kneading(int N)
{
    if (N < 0)
        throw std::invalid_argument("target_kneading: N < 0");
    return target_kneading_length(fibonacci_times(N).back());
}

// Symbols of f^1(0)..f^length(0); escape continues as R (the orbit goes to +inf).
inline std::string critical_itinerary(const MapParams& p, long length)
{
    Stepper s(p);
    s.load(Real(0));
    std::string out;
    out.reserve(static_cast<size_t>(length));
    for (long t = 0; t < length; ++t) {
        s.step();
        if (s.escaped()) {
            out.append(static_cast<size_t>(length - t), 'R');
            break;
        }
        int sg = s.sign();
        out.push_back(sg < 0 ? 'L' : (sg > 0 ? 'R' : 'C'));
    }
    return out;
}

inline int symbol_rank(char c) { return c == 'L' ? 0 : (c == 'C' ? 1 : 2); }

// Parity-lexicographic order: L < C < R at the first difference, reversed after an
// odd number of L symbols (f is decreasing on L).
inline int compare_itineraries(const std::string& a, const std::string& b)
{
    bool odd = false;
    size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) {
        if (a[i] != b[i]) {
            int r = symbol_rank(a[i]) < symbol_rank(b[i]) ? -1 : 1;
            return odd ? -r : r;
        }
        if (a[i] == 'L')
            odd = !odd;
    }
    return 0;
}

// Compares the critical itinerary of c against target without building the whole string;
// stops at the first difference.
inline int compare_to_target(const MapParams& p, const std::string& target)
{
    Stepper s(p);
    s.load(Real(0));
    bool odd = false;
    for (char want : target) {
        s.step();
        char got;
        if (s.escaped()) {
            got = 'R';
        } else {
            int sg = s.sign();
            got = sg < 0 ? 'L' : (sg > 0 ? 'R' : 'C');
        }
        if (got != want) {
            int r = symbol_rank(got) < symbol_rank(want) ? -1 : 1;
            return odd ? -r : r;
        }
        if (got == 'L')
            odd = !odd;
    }
    return 0;
}

struct BisectionResult {
    Real lo, hi;
    FibVerdict verdict;
    int steps = 0;
    long target_length = 0;
};

struct BracketError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BisectOptions {
    Real width_tol;          // stop when hi - lo <= width_tol (defaults to abs_tol)
    int max_steps = 4000;
    int max_extensions = 24; // how far the target itinerary may grow past S_{N+2}
};

// Bisects on c1 in [a, b] for the Fibonacci itinerary. When the midpoint matches the
// whole target prefix, the prefix is lengthened to the next cutting time.
inline BisectionResult bisect_parameter(int l, int N, const Real& a, const Real& b, const Precision& prec,
                                        BisectOptions opt = {})
{
    WorkingPrecision wp(prec.mantissa_bits);
    Real tol = opt.width_tol > 0 ? opt.width_tol : prec.abs_tol;
    BisectionResult res;
    Real lo = a, hi = b;
    if (lo > hi)
        std::swap(lo, hi);
    if (N <= 0) {
        res.lo = lo;
        res.hi = hi;
        res.verdict = check_fibonacci(MapParams(l, (lo + hi) / 2, prec), 0);
        return res;
    }
    FibSchedule S = fibonacci_times(N + 2 + opt.max_extensions);
    size_t k = static_cast<size_t>(N) + 2;
    std::string target = target_kneading_length(S[k]);

    int clo = compare_to_target(MapParams(l, lo, prec), target);
    int chi = compare_to_target(MapParams(l, hi, prec), target);
    if (clo == 0 || chi == 0 || clo == chi)
        throw BracketError("bisect_parameter: bracket does not straddle the Fibonacci itinerary");

    while (hi - lo > tol) {
        if (++res.steps > opt.max_steps)
            throw NonConvergence("bisect_parameter: step limit reached");
        Real mid = (lo + hi) / 2;
        int cm = compare_to_target(MapParams(l, mid, prec), target);
        while (cm == 0 && k + 1 < S.size()) {
            ++k;
            target = target_kneading_length(S[k]);
            cm = compare_to_target(MapParams(l, mid, prec), target);
        }
        if (cm == 0)
            break; // itinerary resolution exhausted; the interval is as narrow as the target allows
        if (cm == clo)
            lo = mid;
        else
            hi = mid;
    }
    res.lo = lo;
    res.hi = hi;
    res.target_length = static_cast<long>(target.size());
    res.verdict = check_fibonacci(MapParams(l, (lo + hi) / 2, prec), N);
    return res;
}

} // namespace fiblab
