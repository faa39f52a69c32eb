#pragma once

// Knot invariants from grid homology: the undiluted HFK table, genus,
// fibredness, Alexander polynomial and tau, plus the JSON result document.

#include "hfkgrid/complex.hpp"
#include "hfkgrid/errors.hpp"
#include "hfkgrid/grid.hpp"
#include "hfkgrid/spectral.hpp"

#include "json.hpp"
#include <openssl/evp.h>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hfk {

/// Laurent polynomial in t: power -> coefficient, zero coefficients dropped.
using LaurentPoly = std::map<int, long long>;

inline void trim_zeros(LaurentPoly& p)
{
    std::erase_if(p, [](const auto& kv) { return kv.second == 0; });
}

/// e.g. "t^3 - t^2 + 1 - t^-2 + t^-3"
inline std::string format_poly(const LaurentPoly& p)
{
    if (p.empty())
        return "0";
    std::string out;
    for (auto it = p.rbegin(); it != p.rend(); ++it) {
        const auto [power, coeff] = *it;
        const long long mag = std::llabs(coeff);
        if (out.empty())
            out += coeff < 0 ? "-" : "";
        else
            out += coeff < 0 ? " - " : " + ";
        if (power == 0 || mag != 1)
            out += std::to_string(mag);
        if (power != 0)
            out += power == 1 ? "t" : "t^" + std::to_string(power);
    }
    return out;
}

struct HfkEntry {
    int a = 0;
    int m = 0;
    std::size_t dim = 0;
    friend bool operator==(const HfkEntry&, const HfkEntry&) = default;
};

struct AlexanderTerm {
    int power = 0;
    long long coeff = 0;
    friend bool operator==(const AlexanderTerm&, const AlexanderTerm&) = default;
};

using HfkTable = std::map<Bigrading, std::size_t>;

struct KnotInvariantSet {
    std::string name;
    std::string grid_hash;
    int n = 0;
    std::vector<HfkEntry> hfk; // sorted by (a, m), nonzero dims only
    int tau = 0;
    int genus = 0;
    bool fibred = false;
    std::vector<AlexanderTerm> alexander; // increasing power
    int dilution_n = 0;

    HfkTable table() const
    {
        HfkTable t;
        for (const auto& e : hfk)
            t[{e.a, e.m}] = e.dim;
        return t;
    }

    std::size_t dim_at(int a, int m) const
    {
        for (const auto& e : hfk)
            if (e.a == a && e.m == m)
                return e.dim;
        return 0;
    }

    std::size_t total_dim() const
    {
        std::size_t s = 0;
        for (const auto& e : hfk)
            s += e.dim;
        return s;
    }

    LaurentPoly alexander_poly() const
    {
        LaurentPoly p;
        for (const auto& t : alexander)
            p[t.power] = t.coeff;
        return p;
    }

    friend bool operator==(const KnotInvariantSet&, const KnotInvariantSet&) = default;
};

/// Everything except name, n, grid_hash and dilution_n.
inline bool same_knot_invariants(const KnotInvariantSet& a, const KnotInvariantSet& b)
{
    return a.hfk == b.hfk && a.tau == b.tau && a.genus == b.genus && a.fibred == b.fibred &&
           a.alexander == b.alexander;
}

inline std::vector<HfkEntry> to_entries(const HfkTable& t)
{
    std::vector<HfkEntry> out;
    for (const auto& [k, d] : t)
        if (d > 0)
            out.push_back({k.a, k.m, d});
    return out;
}

// ---------------------------------------------------------------------------
// Dilution

/// Divides the two-variable dimension polynomial by (1 + u)^(n-1), where u
/// shifts (a, m) by (-1, -1). With a floor, the input is only known at
/// a >= floor; the division runs top-down, so the quotient is still exact
/// there and is returned only there.
inline HfkTable deconvolve(const HfkTable& tilde, int n, std::optional<int> floor = std::nullopt)
{
    if (n < 1)
        throw DomainError("deconvolve: grid size must be positive");
    // Diagonals m - a are independent; along one, it is a division of
    // polynomials in u.
    std::map<int, std::map<int, long long>> diagonals; // m - a -> a -> coeff
    for (const auto& [k, d] : tilde)
        if (d > 0 && (!floor || k.a >= *floor))
            diagonals[k.m - k.a][k.a] = static_cast<long long>(d);

    for (int step = 0; step < n - 1; ++step) {
        for (auto& [diag, c] : diagonals) {
            if (c.empty())
                continue;
            const int top = c.rbegin()->first;
            const int bottom = floor ? std::max(c.begin()->first, *floor) : c.begin()->first;
            std::map<int, long long> q;
            long long above = 0;
            for (int a = top; a >= bottom; --a) {
                const auto it = c.find(a);
                const long long v = (it == c.end() ? 0 : it->second) - above;
                if (v < 0)
                    throw DeconvolutionFailed("deconvolve: negative coefficient at (a, m) = (" + std::to_string(a) +
                                              ", " + std::to_string(a + diag) + ")");
                if (v > 0)
                    q[a] = v;
                above = v;
            }
            if (floor) {
                c = std::move(q);
                continue;
            }
            // (1 + u) q has a term one step below q's bottom; it must vanish.
            if (above != 0)
                throw DeconvolutionFailed("deconvolve: nonzero remainder at (a, m) = (" + std::to_string(bottom - 1) +
                                          ", " + std::to_string(bottom - 1 + diag) + ")");
            q.erase(bottom);
            c = std::move(q);
        }
    }
    HfkTable out;
    for (const auto& [diag, c] : diagonals)
        for (const auto& [a, v] : c)
            out[{a, a + diag}] = static_cast<std::size_t>(v);
    return out;
}

/// Multiplies by (1 + u)^(n-1).
inline HfkTable dilute(const HfkTable& hfk, int n)
{
    HfkTable cur = hfk;
    for (int step = 0; step < n - 1; ++step) {
        HfkTable next;
        for (const auto& [k, d] : cur) {
            next[k] += d;
            next[{k.a - 1, k.m - 1}] += d;
        }
        cur = std::move(next);
    }
    std::erase_if(cur, [](const auto& kv) { return kv.second == 0; });
    return cur;
}

// ---------------------------------------------------------------------------
// Invariants of an HFK table

inline int genus(const HfkTable& hfk)
{
    std::optional<int> top;
    for (const auto& [k, d] : hfk)
        if (d > 0 && (!top || k.a > *top))
            top = k.a;
    if (!top)
        throw DomainError("genus: empty HFK table");
    return *top;
}

inline bool is_fibred(const HfkTable& hfk)
{
    const int g = genus(hfk);
    std::size_t s = 0;
    for (const auto& [k, d] : hfk)
        if (k.a == g)
            s += d;
    return s == 1;
}

/// Symmetrized Alexander polynomial as the graded Euler characteristic.
inline LaurentPoly alexander_poly(const HfkTable& hfk)
{
    LaurentPoly p;
    for (const auto& [k, d] : hfk)
        p[k.a] += (k.m % 2 == 0 ? 1 : -1) * static_cast<long long>(d);
    trim_zeros(p);
    long long at_one = 0;
    for (const auto& [power, c] : p) {
        at_one += c;
        const auto mirror = p.find(-power);
        if (mirror == p.end() || mirror->second != c)
            throw InvariantViolation("alexander_poly: polynomial is not symmetric under t -> 1/t");
    }
    if (at_one != 1 && at_one != -1)
        throw InvariantViolation("alexander_poly: Delta(1) = " + std::to_string(at_one) + ", expected +-1");
    return p;
}

/// Delta from the state sum sum_x (-1)^M(x) t^A(x) = Delta(t) (1 - t^-1)^(n-1),
/// without computing homology.
inline LaurentPoly euler_oracle(const GridDiagram& g, int size_cap = kDefaultSizeCap)
{
    require_knot(g);
    LaurentPoly p;
    StateEnumerator it(g, std::nullopt, size_cap);
    GridState s;
    while (it.next(s))
        p[s.alexander] += s.maslov % 2 == 0 ? 1 : -1;
    trim_zeros(p);
    for (int step = 0; step < g.size() - 1; ++step) {
        if (p.empty())
            throw DeconvolutionFailed("euler_oracle: state sum vanishes");
        // p = q (1 - t^-1): q(a) = p(a) + q(a + 1), solved from the top.
        const int top = p.rbegin()->first;
        const int bottom = p.begin()->first;
        LaurentPoly q;
        long long above = 0;
        for (int a = top; a >= bottom; --a) {
            const auto f = p.find(a);
            const long long v = (f == p.end() ? 0 : f->second) + above;
            if (v != 0)
                q[a] = v;
            above = v;
        }
        if (above != 0)
            throw DeconvolutionFailed("euler_oracle: state sum is not divisible by (1 - t^-1)");
        q.erase(bottom);
        p = std::move(q);
    }
    return p;
}

inline std::vector<AlexanderTerm> to_terms(const LaurentPoly& p)
{
    std::vector<AlexanderTerm> out;
    for (const auto& [power, c] : p)
        if (c != 0)
            out.push_back({power, c});
    return out;
}

// ---------------------------------------------------------------------------
// Hashing

inline std::string sha256_hex(const std::string& data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256: digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

inline std::string grid_hash(const GridDiagram& g) { return sha256_hex(g.canonical_text()); }

// ---------------------------------------------------------------------------
// E^infinity dilution profile

/// dim E^infinity = binomial(n-1, k) at (tau - k, -k), zero elsewhere.
inline bool dilution_profile_matches(const Page& infinity, int n, int tau_value)
{
    std::map<Bigrading, std::size_t> expected;
    std::size_t binom = 1;
    for (int k = 0; k <= n - 1; ++k) {
        expected[{tau_value - k, -k}] = binom;
        binom = binom * static_cast<std::size_t>(n - 1 - k) / static_cast<std::size_t>(k + 1);
    }
    return infinity.dims() == expected;
}

// ---------------------------------------------------------------------------
// Pipeline

struct PipelineOptions {
    int size_cap = kDefaultSizeCap;
    unsigned threads = 1;
};

/// Intermediate products kept for reporting and tests.
struct PipelineResult {
    KnotInvariantSet invariants;
    HfkTable tilde_dims;
    std::map<Bigrading, std::size_t> e0_dims;
    std::map<Bigrading, std::size_t> einf_dims;
    int stabilization_page = 0;
    int naive_tau = 0;
    LaurentPoly euler;
};

namespace detail {

inline void require(bool ok, const std::string& what)
{
    if (!ok)
        throw InvariantViolation("consistency check failed: " + what);
}

} // namespace detail

/// Complexes -> homology -> deconvolution -> pages -> tau -> invariants, with
/// the cross-checks between stages enforced.
inline PipelineResult compute_pipeline(const GridDiagram& g, const PipelineOptions& opt = {})
{
    using detail::require;
    const int n = g.size();
    PipelineResult res;

    auto complexes = build_grid_complexes(g, opt.size_cap);
    res.tilde_dims = homology_dims(complexes.tilde, opt.threads);
    res.e0_dims = complexes.filtered.generator_counts();
    const HfkTable hfk = deconvolve(res.tilde_dims, n);
    require(dilute(hfk, n) == res.tilde_dims, "deconvolved table does not re-dilute to the tilde homology");

    // Pages of the complex with all filtration-preserving arrows cancelled;
    // its E^1 page is the tilde homology, with d^0 = 0.
    const auto reduced = cancel_filtration_preserving(complexes.filtered);
    const auto pages = compute_pages(reduced.complex);
    require(pages.page(1).dims() == res.tilde_dims, "E^1 differs from the tilde homology");
    res.einf_dims = pages.infinity().dims();
    res.stabilization_page = pages.stabilization_page();
    require(e_infinity_check(reduced.complex, pages).ok, "E^infinity differs from the filtration of H");

    const int t_diluted = tau(pages);
    res.naive_tau = naive_tau(reduced.complex);
    require(t_diluted - res.naive_tau == n - 1, "tau - naive_tau != n - 1");
    require(dilution_profile_matches(pages.infinity(), n, t_diluted), "E^infinity is not the binomial profile");

    KnotInvariantSet& k = res.invariants;
    k.name = g.name();
    k.grid_hash = grid_hash(g);
    k.n = n;
    k.hfk = to_entries(hfk);
    k.tau = t_diluted;
    k.genus = genus(hfk);
    k.fibred = is_fibred(hfk);
    const auto delta = alexander_poly(hfk);
    k.alexander = to_terms(delta);
    k.dilution_n = n - 1;

    require(k.tau >= -k.genus && k.tau <= k.genus, "|tau| > genus");
    res.euler = euler_oracle(g, opt.size_cap);
    require(res.euler == delta, "Euler characteristic of the states disagrees with HFK");
    return res;
}

inline KnotInvariantSet compute_all(const GridDiagram& g, const PipelineOptions& opt = {})
{
    return compute_pipeline(g, opt).invariants;
}

/// Pairs (a, m) where dim(a, m) != dim(-a, m - 2a).
inline std::vector<Bigrading> symmetry_defects(const HfkTable& hfk)
{
    std::vector<Bigrading> out;
    for (const auto& [k, d] : hfk) {
        const auto it = hfk.find({-k.a, k.m - 2 * k.a});
        if (it == hfk.end() ? d != 0 : it->second != d)
            out.push_back(k);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Large grids

/// HFK at Alexander gradings >= a_min, from those tilde levels alone.
inline HfkTable hfk_above(const GridDiagram& g, int a_min, int size_cap = kDefaultSizeCap)
{
    return deconvolve(tilde_homology_above(g, a_min, size_cap), g.size(), a_min);
}

/// Extends a table known at a >= 0 to all gradings with
/// dim HFK_m(a) = dim HFK_{m-2a}(-a). The a = 0 column must be self-symmetric.
inline HfkTable complete_by_symmetry(const HfkTable& upper)
{
    HfkTable out;
    for (const auto& [k, d] : upper) {
        if (k.a < 0)
            throw DomainError("complete_by_symmetry: table has entries below a = 0");
        if (d == 0)
            continue;
        out[k] = d;
        if (k.a > 0)
            out[{-k.a, k.m - 2 * k.a}] = d;
    }
    if (!symmetry_defects(out).empty())
        throw InvariantViolation("complete_by_symmetry: the a = 0 column is not symmetric");
    return out;
}

struct SymmetricHfkResult {
    HfkTable hfk;
    std::size_t states_used = 0; // generators with a >= 0
    int genus = 0;
    bool fibred = false;
    LaurentPoly alexander; // from hfk
    LaurentPoly euler;     // from the state sum over every generator
};

/// Knot Floer homology of grids too large for the full filtered complex:
/// the Alexander levels a >= 0 of the tilde complex, completed by symmetry.
/// tau needs the whole filtered complex and is not computed. The Alexander
/// polynomial of the table must equal the state sum over all n! generators.
inline SymmetricHfkResult hfk_by_symmetry(const GridDiagram& g, int size_cap = kDefaultSizeCap)
{
    SymmetricHfkResult r;
    const auto c = build_tilde_complex_above(g, 0, size_cap);
    r.states_used = c.size();
    auto tilde = cancel_filtration_preserving(c).complex.generator_counts();
    std::erase_if(tilde, [](const auto& kv) { return kv.second == 0; });
    r.hfk = complete_by_symmetry(deconvolve(tilde, g.size(), 0));
    r.genus = genus(r.hfk);
    r.fibred = is_fibred(r.hfk);
    r.alexander = alexander_poly(r.hfk);
    r.euler = euler_oracle(g, size_cap);
    detail::require(r.euler == r.alexander, "Euler characteristic of the states disagrees with HFK");
    return r;
}

// ---------------------------------------------------------------------------
// JSON

inline constexpr int kSchemaVersion = 1;

inline nlohmann::json to_json(const KnotInvariantSet& k)
{
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["name"] = k.name;
    j["grid_hash"] = k.grid_hash;
    j["n"] = k.n;
    j["hfk"] = nlohmann::json::array();
    for (const auto& e : k.hfk)
        j["hfk"].push_back({{"a", e.a}, {"m", e.m}, {"dim", e.dim}});
    j["tau"] = k.tau;
    j["genus"] = k.genus;
    j["fibred"] = k.fibred;
    j["alexander"] = nlohmann::json::array();
    for (const auto& t : k.alexander)
        j["alexander"].push_back({{"power", t.power}, {"coeff", t.coeff}});
    j["dilution_n"] = k.dilution_n;
    return j;
}

/// Throws SchemaMismatch on a missing field or a different schema version.
inline KnotInvariantSet invariants_from_json(const nlohmann::json& j)
{
    try {
        if (j.at("schema_version").get<int>() != kSchemaVersion)
            throw SchemaMismatch("result document has schema_version " + j.at("schema_version").dump() + ", expected " +
                        std::to_string(kSchemaVersion));
        KnotInvariantSet k;
        k.name = j.at("name").get<std::string>();
        k.grid_hash = j.at("grid_hash").get<std::string>();
        k.n = j.at("n").get<int>();
        for (const auto& e : j.at("hfk"))
            k.hfk.push_back({e.at("a").get<int>(), e.at("m").get<int>(), e.at("dim").get<std::size_t>()});
        k.tau = j.at("tau").get<int>();
        k.genus = j.at("genus").get<int>();
        k.fibred = j.at("fibred").get<bool>();
        for (const auto& t : j.at("alexander"))
            k.alexander.push_back({t.at("power").get<int>(), t.at("coeff").get<long long>()});
        k.dilution_n = j.at("dilution_n").get<int>();
        return k;
    }
    catch (const nlohmann::json::exception& e) {
        throw SchemaMismatch(std::string("malformed result document: ") + e.what());
    }
}

/// Canonical serialization: sorted keys, two-space indent, trailing newline.
inline std::string to_document(const KnotInvariantSet& k) { return to_json(k).dump(2) + "\n"; }

} // namespace hfk
