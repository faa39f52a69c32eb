#pragma once

// Concordance-order obstructions between knots, evaluated on their invariant
// sets. A "not_obstructed" verdict only means no check fired.

#include "hfkgrid/invariants.hpp"

#include "json.hpp"

#include <set>
#include <string>
#include <vector>

namespace hfk {

enum class ObstructionMode { Invertible, Concordance, DoublySlice };

inline std::string to_string(ObstructionMode m)
{
    switch (m) {
    case ObstructionMode::Invertible: return "invertible";
    case ObstructionMode::Concordance: return "concordance";
    case ObstructionMode::DoublySlice: return "doubly_slice";
    }
    return "invertible";
}

struct Witness {
    std::string check;    // hfk_dimension | genus_monotonicity | fibredness_transfer | tau_equality
    std::string theorem;  // the result that licenses the check
    std::string location; // "(i=0, j=0)", "genus", ...
    std::string lhs;      // value for the source knot
    std::string rhs;      // value for the target knot
    friend bool operator==(const Witness&, const Witness&) = default;
};

struct ObstructionReport {
    ObstructionMode mode = ObstructionMode::Invertible;
    std::vector<Witness> witnesses;
    /// Total HFK dimensions of the two knots; recorded only.
    std::size_t total_dim_from = 0;
    std::size_t total_dim_to = 0;

    bool obstructed() const noexcept { return !witnesses.empty(); }
    std::string verdict() const { return obstructed() ? "obstructed" : "not_obstructed"; }

    bool has_check(const std::string& check) const
    {
        for (const auto& w : witnesses)
            if (w.check == check)
                return true;
        return false;
    }
};

namespace detail {

inline constexpr const char* kInvertibleTheorem =
    "invertible concordance K0 -> K1 implies dim HFK_j(K0, i) <= dim HFK_j(K1, i)";
inline constexpr const char* kGenusTheorem = "genus is monotonic in the invertible-concordance order";
inline constexpr const char* kFibredTheorem = "K1 fibred and g(K0) = g(K1) imply K0 fibred";
inline constexpr const char* kTauTheorem = "tau is a concordance invariant";

inline void tau_check(const KnotInvariantSet& k0, const KnotInvariantSet& k1, std::vector<Witness>& out)
{
    if (k0.tau != k1.tau)
        out.push_back({"tau_equality", kTauTheorem, "tau", std::to_string(k0.tau), std::to_string(k1.tau)});
}

} // namespace detail

/// Checks, in order: pointwise HFK dimensions, genus, fibredness, tau.
inline ObstructionReport invertible_obstruction(const KnotInvariantSet& k0, const KnotInvariantSet& k1)
{
    ObstructionReport rep;
    rep.mode = ObstructionMode::Invertible;
    rep.total_dim_from = k0.total_dim();
    rep.total_dim_to = k1.total_dim();

    const auto t0 = k0.table();
    const auto t1 = k1.table();
    for (const auto& [k, d0] : t0) {
        const auto it = t1.find(k);
        const std::size_t d1 = it == t1.end() ? 0 : it->second;
        if (d0 > d1)
            rep.witnesses.push_back({"hfk_dimension", detail::kInvertibleTheorem,
                                     "(i=" + std::to_string(k.a) + ", j=" + std::to_string(k.m) + ")",
                                     std::to_string(d0), std::to_string(d1)});
    }
    if (k0.genus > k1.genus)
        rep.witnesses.push_back(
            {"genus_monotonicity", detail::kGenusTheorem, "genus", std::to_string(k0.genus), std::to_string(k1.genus)});
    if (k0.genus == k1.genus && k1.fibred && !k0.fibred)
        rep.witnesses.push_back({"fibredness_transfer", detail::kFibredTheorem, "fibred", "false", "true"});
    detail::tau_check(k0, k1, rep.witnesses);
    return rep;
}

inline ObstructionReport concordance_obstruction(const KnotInvariantSet& k0, const KnotInvariantSet& k1)
{
    ObstructionReport rep;
    rep.mode = ObstructionMode::Concordance;
    rep.total_dim_from = k0.total_dim();
    rep.total_dim_to = k1.total_dim();
    detail::tau_check(k0, k1, rep.witnesses);
    return rep;
}

/// HFK(U) = F2 in bigrading (0, 0).
inline KnotInvariantSet unknot_invariants()
{
    KnotInvariantSet u;
    u.name = "unknot";
    u.n = 1;
    u.hfk = {{0, 0, 1}};
    u.alexander = {{0, 1}};
    u.fibred = true;
    return u;
}

/// A doubly slice knot K satisfies U <= K.
inline ObstructionReport doubly_slice_obstruction(const KnotInvariantSet& k)
{
    auto rep = invertible_obstruction(unknot_invariants(), k);
    rep.mode = ObstructionMode::DoublySlice;
    return rep;
}

inline ObstructionReport obstruction(ObstructionMode mode, const KnotInvariantSet& k0, const KnotInvariantSet& k1)
{
    switch (mode) {
    case ObstructionMode::Concordance: return concordance_obstruction(k0, k1);
    case ObstructionMode::DoublySlice: return doubly_slice_obstruction(k1);
    case ObstructionMode::Invertible: break;
    }
    return invertible_obstruction(k0, k1);
}

inline nlohmann::json to_json(const ObstructionReport& r)
{
    nlohmann::json j;
    j["mode"] = to_string(r.mode);
    j["verdict"] = r.verdict();
    j["witnesses"] = nlohmann::json::array();
    for (const auto& w : r.witnesses)
        j["witnesses"].push_back(
            {{"check", w.check}, {"theorem", w.theorem}, {"location", w.location}, {"lhs", w.lhs}, {"rhs", w.rhs}});
    j["total_dims"] = {{"from", r.total_dim_from}, {"to", r.total_dim_to}};
    return j;
}

} // namespace hfk
