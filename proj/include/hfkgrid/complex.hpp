#pragma once

// Chain complexes attached to a grid diagram.
//
// Both complexes share the generator set (all grid states, indexed in
// lexicographic permutation order) and differ only in which empty rectangles
// they count: the tilde complex avoids every marking, the filtered complex
// avoids the O's and lets rectangles cross X's, which lowers the Alexander
// filtration by the number of X's crossed.

#include "hfkgrid/errors.hpp"
#include "hfkgrid/f2linalg.hpp"
#include "hfkgrid/grid.hpp"
#include "hfkgrid/parallel.hpp"

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hfk {

/// (Alexander, Maslov) or, for filtered complexes, (filtration p, homological m).
struct Bigrading {
    int a = 0;
    int m = 0;
    friend auto operator<=>(const Bigrading&, const Bigrading&) = default;
};

using Column = std::vector<std::uint32_t>;

namespace detail {

/// Symmetric difference of two sorted index lists.
inline Column xor_sorted(const Column& a, const Column& b)
{
    Column out;
    out.reserve(a.size() + b.size());
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

/// Sort and drop entries occurring an even number of times.
inline void normalize_mod2(Column& c)
{
    std::sort(c.begin(), c.end());
    Column out;
    out.reserve(c.size());
    for (std::size_t i = 0; i < c.size();) {
        std::size_t j = i;
        while (j < c.size() && c[j] == c[i])
            ++j;
        if ((j - i) % 2 == 1)
            out.push_back(c[i]);
        i = j;
    }
    c = std::move(out);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Bigraded (tilde) complex

struct BigradedComplexF2 {
    /// Generators of each block, as indices into the global generator list.
    std::map<Bigrading, std::vector<std::uint32_t>> blocks;
    /// Differential out of block (a, m) into block (a, m-1); rows index the
    /// target block, columns the source block. Missing key = zero map.
    std::map<Bigrading, f2::MatF2> differentials;

    std::size_t size() const
    {
        std::size_t s = 0;
        for (const auto& [k, v] : blocks)
            s += v.size();
        return s;
    }

    std::size_t block_size(Bigrading k) const
    {
        auto it = blocks.find(k);
        return it == blocks.end() ? 0 : it->second.size();
    }

    /// Throws InvariantViolation unless d^2 = 0 blockwise.
    void check_square_zero() const
    {
        for (const auto& [k, d] : differentials) {
            auto next = differentials.find({k.a, k.m - 1});
            if (next == differentials.end())
                continue;
            if (!(next->second * d).is_zero())
                throw InvariantViolation("d^2 != 0 in block (" + std::to_string(k.a) + ", " + std::to_string(k.m) + ")");
        }
    }
};

// ---------------------------------------------------------------------------
// Filtered complex

struct FilteredGenerator {
    int filtration = 0; // p
    int maslov = 0;     // homological grading m = p + q
    friend bool operator==(const FilteredGenerator&, const FilteredGenerator&) = default;
};

class FilteredComplexF2 {
public:
    FilteredComplexF2() = default;

    /// columns[j] lists (sorted) the generators in the boundary of generator j.
    /// Validates gradings, the filtration condition and d^2 = 0.
    FilteredComplexF2(std::vector<FilteredGenerator> generators, std::vector<Column> columns)
        : generators_(std::move(generators)), columns_(std::move(columns))
    {
        if (columns_.size() != generators_.size())
            throw DimensionMismatch("FilteredComplexF2: one boundary column per generator required");
        for (auto& c : columns_)
            detail::normalize_mod2(c);
        validate();
    }

    std::size_t size() const noexcept { return generators_.size(); }
    const std::vector<FilteredGenerator>& generators() const noexcept { return generators_; }
    const FilteredGenerator& generator(std::size_t i) const { return generators_[i]; }
    const std::vector<Column>& boundary() const noexcept { return columns_; }
    const Column& boundary_of(std::size_t j) const { return columns_[j]; }

    /// [p_min, p_max]; F_{p_min - 1} = 0 and F_{p_max} = C.
    int p_min() const noexcept { return p_min_; }
    int p_max() const noexcept { return p_max_; }

    std::vector<int> maslov_gradings() const
    {
        std::vector<int> ms;
        for (const auto& g : generators_)
            ms.push_back(g.maslov);
        std::sort(ms.begin(), ms.end());
        ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
        return ms;
    }

    /// Full boundary matrix (rows = targets, columns = sources).
    f2::MatF2 dense_boundary() const
    {
        f2::MatF2 d(size(), size());
        for (std::size_t j = 0; j < size(); ++j)
            for (auto i : columns_[j])
                d.set(i, j);
        return d;
    }

    /// Generator counts per (p, m), i.e. the E^0 page.
    std::map<Bigrading, std::size_t> generator_counts() const
    {
        std::map<Bigrading, std::size_t> out;
        for (const auto& g : generators_)
            ++out[{g.filtration, g.maslov}];
        return out;
    }

private:
    void validate()
    {
        const std::size_t n = size();
        p_min_ = 0;
        p_max_ = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == 0 || generators_[i].filtration < p_min_)
                p_min_ = generators_[i].filtration;
            if (i == 0 || generators_[i].filtration > p_max_)
                p_max_ = generators_[i].filtration;
        }
        for (std::size_t j = 0; j < n; ++j) {
            for (auto i : columns_[j]) {
                if (i >= n)
                    throw DimensionMismatch("FilteredComplexF2: boundary entry out of range");
                if (generators_[i].maslov != generators_[j].maslov - 1)
                    throw InvariantViolation("FilteredComplexF2: boundary does not lower the Maslov grading by one");
                if (generators_[i].filtration > generators_[j].filtration)
                    throw InvariantViolation("FilteredComplexF2: boundary raises the filtration");
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            Column dd;
            for (auto i : columns_[j])
                dd.insert(dd.end(), columns_[i].begin(), columns_[i].end());
            detail::normalize_mod2(dd);
            if (!dd.empty())
                throw InvariantViolation("FilteredComplexF2: d^2 != 0 on generator " + std::to_string(j));
        }
    }

    std::vector<FilteredGenerator> generators_;
    std::vector<Column> columns_;
    int p_min_ = 0;
    int p_max_ = 0;
};

// ---------------------------------------------------------------------------
// Grid complexes

/// All grid states in lexicographic order with their gradings, plus the
/// boundary arrows of the filtered complex tagged with their filtration drop.
struct GridChainData {
    int n = 0;
    std::vector<int> alexander;
    std::vector<int> maslov;
    std::vector<Column> filtered_columns;
    std::vector<Column> tilde_columns;
};

namespace detail {

/// Column heights of the X and O cells.
struct MarkingHeights {
    std::vector<int> x;
    std::vector<int> o;

    explicit MarkingHeights(const GridDiagram& g)
        : x(static_cast<std::size_t>(g.size())), o(static_cast<std::size_t>(g.size()))
    {
        const int n = g.size();
        for (int r = 0; r < n; ++r) {
            x[static_cast<std::size_t>(g.x_cols()[static_cast<std::size_t>(r)])] = n - 1 - r;
            o[static_cast<std::size_t>(g.o_cols()[static_cast<std::size_t>(r)])] = n - 1 - r;
        }
    }
};

/// Calls f(y, x_marks) for every empty rectangle x -> y without O's.
template <class F>
void for_each_o_free_rectangle(const MarkingHeights& h, const Permutation& x, F&& f)
{
    const int n = static_cast<int>(x.size());
    Permutation y;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a == b)
                continue;
            const int bottom = x[static_cast<std::size_t>(a)];
            const int width = ((b - a) % n + n) % n;
            const int height = ((x[static_cast<std::size_t>(b)] - bottom) % n + n) % n;
            int x_marks = 0;
            bool ok = true;
            for (int s = 0; s < width && ok; ++s) {
                const int col = (a + s) % n;
                if (cyclic_between(h.o[static_cast<std::size_t>(col)], bottom, height, n))
                    ok = false;
                else if (s > 0 && cyclic_strictly_inside(x[static_cast<std::size_t>(col)], bottom, height, n))
                    ok = false;
                else if (cyclic_between(h.x[static_cast<std::size_t>(col)], bottom, height, n))
                    ++x_marks;
            }
            if (!ok)
                continue;
            y = x;
            std::swap(y[static_cast<std::size_t>(a)], y[static_cast<std::size_t>(b)]);
            f(y, x_marks);
        }
    }
}

inline GridChainData grid_chain_data(const GridDiagram& g, int size_cap)
{
    require_knot(g);
    const int n = g.size();
    if (n > size_cap)
        throw CapExceeded("grid size " + std::to_string(n) + " exceeds the cap of " + std::to_string(size_cap));

    const auto total = static_cast<std::size_t>(factorial(n));
    GridChainData data;
    data.n = n;
    data.alexander.resize(total);
    data.maslov.resize(total);
    data.filtered_columns.resize(total);
    data.tilde_columns.resize(total);

    const MarkingHeights heights(g);
    const GradingContext ctx(g);
    Permutation x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        x[static_cast<std::size_t>(i)] = i;
    std::size_t index = 0;
    do {
        data.alexander[index] = ctx.alexander(x);
        data.maslov[index] = ctx.maslov(x);
        Column& out = data.filtered_columns[index];
        Column& out_tilde = data.tilde_columns[index];
        for_each_o_free_rectangle(heights, x, [&](const Permutation& y, int x_marks) {
            const auto target = permutation_rank(y);
            out.push_back(target);
            if (x_marks == 0)
                out_tilde.push_back(target);
        });
        normalize_mod2(out);
        normalize_mod2(out_tilde);
        ++index;
    } while (std::next_permutation(x.begin(), x.end()));
    return data;
}

} // namespace detail

inline BigradedComplexF2 bigraded_from_columns(const std::vector<int>& alexander, const std::vector<int>& maslov,
                                               const std::vector<Column>& columns)
{
    BigradedComplexF2 c;
    std::vector<std::uint32_t> local(alexander.size());
    for (std::uint32_t i = 0; i < alexander.size(); ++i) {
        auto& block = c.blocks[{alexander[i], maslov[i]}];
        local[i] = static_cast<std::uint32_t>(block.size());
        block.push_back(i);
    }
    for (const auto& [key, gens] : c.blocks) {
        const Bigrading target{key.a, key.m - 1};
        const std::size_t rows = c.block_size(target);
        f2::MatF2 d(rows, gens.size());
        bool nonzero = false;
        for (std::size_t j = 0; j < gens.size(); ++j) {
            for (auto t : columns[gens[j]]) {
                if (alexander[t] != key.a || maslov[t] != key.m - 1)
                    throw InvariantViolation("tilde differential leaves its block");
                d.set(local[t], j);
                nonzero = true;
            }
        }
        if (nonzero)
            c.differentials.emplace(key, std::move(d));
    }
    return c;
}

/// Tilde complex: empty rectangles containing no markings at all.
inline BigradedComplexF2 build_tilde_complex(const GridDiagram& g, int size_cap = kDefaultSizeCap)
{
    const auto data = detail::grid_chain_data(g, size_cap);
    auto c = bigraded_from_columns(data.alexander, data.maslov, data.tilde_columns);
    c.check_square_zero();
    return c;
}

/// Filtered complex: empty rectangles avoiding the O's; filtration = Alexander.
inline FilteredComplexF2 build_filtered_complex(const GridDiagram& g, int size_cap = kDefaultSizeCap)
{
    auto data = detail::grid_chain_data(g, size_cap);
    std::vector<FilteredGenerator> gens(data.alexander.size());
    for (std::size_t i = 0; i < gens.size(); ++i)
        gens[i] = {data.alexander[i], data.maslov[i]};
    return FilteredComplexF2(std::move(gens), std::move(data.filtered_columns));
}

struct GridComplexes {
    BigradedComplexF2 tilde;
    FilteredComplexF2 filtered;
};

/// Both complexes from a single state enumeration.
inline GridComplexes build_grid_complexes(const GridDiagram& g, int size_cap = kDefaultSizeCap)
{
    auto data = detail::grid_chain_data(g, size_cap);
    GridComplexes out;
    out.tilde = bigraded_from_columns(data.alexander, data.maslov, data.tilde_columns);
    out.tilde.check_square_zero();
    std::vector<FilteredGenerator> gens(data.alexander.size());
    for (std::size_t i = 0; i < gens.size(); ++i)
        gens[i] = {data.alexander[i], data.maslov[i]};
    out.filtered = FilteredComplexF2(std::move(gens), std::move(data.filtered_columns));
    return out;
}

/// The filtration-preserving part of the boundary, as a bigraded complex with
/// the same global indexing.
inline BigradedComplexF2 associated_graded(const FilteredComplexF2& c)
{
    std::vector<int> p(c.size());
    std::vector<int> m(c.size());
    std::vector<Column> cols(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) {
        p[j] = c.generator(j).filtration;
        m[j] = c.generator(j).maslov;
        for (auto i : c.boundary_of(j))
            if (c.generator(i).filtration == p[j])
                cols[j].push_back(i);
    }
    return bigraded_from_columns(p, m, cols);
}

/// Entries of the boundary that strictly lower the filtration.
inline std::vector<Column> strictly_dropping_part(const FilteredComplexF2& c)
{
    std::vector<Column> cols(c.size());
    for (std::size_t j = 0; j < c.size(); ++j)
        for (auto i : c.boundary_of(j))
            if (c.generator(i).filtration < c.generator(j).filtration)
                cols[j].push_back(i);
    return cols;
}

// ---------------------------------------------------------------------------
// Homology

/// dim ker - dim im per block, with block ranks computed on `threads` workers.
inline std::map<Bigrading, std::size_t> homology_dims(const BigradedComplexF2& c, unsigned threads = 1)
{
    std::vector<Bigrading> keys;
    std::vector<const f2::MatF2*> mats;
    for (const auto& [k, d] : c.differentials) {
        keys.push_back(k);
        mats.push_back(&d);
    }
    std::vector<std::size_t> ranks(keys.size());
    detail::parallel_for(keys.size(), threads, [&](std::size_t i) { ranks[i] = f2::rank(*mats[i]); });
    std::map<Bigrading, std::size_t> rank_out;
    for (std::size_t i = 0; i < keys.size(); ++i)
        rank_out[keys[i]] = ranks[i];

    std::map<Bigrading, std::size_t> out;
    for (const auto& [k, gens] : c.blocks) {
        const std::size_t r_out = rank_out.count(k) ? rank_out[k] : 0;
        const Bigrading above{k.a, k.m + 1};
        const std::size_t r_in = rank_out.count(above) ? rank_out[above] : 0;
        const std::size_t h = gens.size() - r_out - r_in;
        if (h > 0)
            out[k] = h;
    }
    return out;
}

/// Generators and dense differential of one homological grading.
struct MaslovSlice {
    int m = 0;
    std::vector<std::uint32_t> generators; // global indices, increasing
};

namespace detail {

inline std::map<int, MaslovSlice> maslov_slices(const FilteredComplexF2& c)
{
    std::map<int, MaslovSlice> out;
    for (std::uint32_t i = 0; i < c.size(); ++i) {
        auto& s = out[c.generator(i).maslov];
        s.m = c.generator(i).maslov;
        s.generators.push_back(i);
    }
    return out;
}

/// Dense boundary C_m -> C_{m-1} in slice-local coordinates.
inline f2::MatF2 slice_boundary(const FilteredComplexF2& c, const MaslovSlice* source, const MaslovSlice* target)
{
    const std::size_t cols = source ? source->generators.size() : 0;
    const std::size_t rows = target ? target->generators.size() : 0;
    f2::MatF2 d(rows, cols);
    if (!source || !target)
        return d;
    for (std::size_t j = 0; j < cols; ++j) {
        for (auto t : c.boundary_of(source->generators[j])) {
            const auto it = std::lower_bound(target->generators.begin(), target->generators.end(), t);
            d.set(static_cast<std::size_t>(it - target->generators.begin()), j);
        }
    }
    return d;
}

} // namespace detail

/// dim H_m(C) for every m with generators.
inline std::map<int, std::size_t> total_homology(const FilteredComplexF2& c)
{
    const auto slices = detail::maslov_slices(c);
    std::map<int, std::size_t> rank_out;
    for (const auto& [m, s] : slices) {
        auto below = slices.find(m - 1);
        rank_out[m] = below == slices.end() ? 0 : f2::rank(detail::slice_boundary(c, &s, &below->second));
    }
    std::map<int, std::size_t> out;
    for (const auto& [m, s] : slices) {
        const std::size_t r_in = rank_out.count(m + 1) ? rank_out[m + 1] : 0;
        const std::size_t h = s.generators.size() - rank_out[m] - r_in;
        if (h > 0)
            out[m] = h;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reduction

/// A filtered complex obtained by cancelling every filtration-preserving
/// boundary arrow, together with the original index of each survivor.
struct ReducedComplex {
    FilteredComplexF2 complex;
    std::vector<std::uint32_t> original_index;
};

/// Cancels arrows x -> y with equal filtration until none remain. The result
/// is filtered chain homotopy equivalent to the input, has zero associated
/// graded differential, and so has one generator per E^1 class; its spectral
/// sequence agrees with the input's from E^1 on.
inline ReducedComplex cancel_filtration_preserving(const FilteredComplexF2& c)
{
    const std::size_t n = c.size();
    std::vector<Column> out = c.boundary();
    std::vector<Column> in(n);
    for (std::uint32_t j = 0; j < n; ++j)
        for (auto i : out[j])
            in[i].push_back(j);
    std::vector<bool> alive(n, true);

    auto erase_from = [](Column& col, std::uint32_t v) {
        auto it = std::lower_bound(col.begin(), col.end(), v);
        if (it != col.end() && *it == v)
            col.erase(it);
    };
    auto insert_into = [](Column& col, std::uint32_t v) { col.insert(std::lower_bound(col.begin(), col.end(), v), v); };

    bool changed = true;
    while (changed) {
        changed = false;
        for (std::uint32_t x = 0; x < n; ++x) {
            if (!alive[x])
                continue;
            const int px = c.generator(x).filtration;
            std::uint32_t y = 0;
            bool found = false;
            for (auto t : out[x]) {
                if (c.generator(t).filtration == px) {
                    y = t;
                    found = true;
                    break;
                }
            }
            if (!found)
                continue;
            changed = true;

            // d'w = dw + <dw, y> dx for every other w hitting y.
            const Column dx = out[x];
            const Column sources = in[y];
            for (auto w : sources) {
                if (w == x)
                    continue;
                Column updated = detail::xor_sorted(out[w], dx);
                // Maintain the transposed lists for the entries that flipped.
                for (auto t : dx) {
                    const bool had = std::binary_search(out[w].begin(), out[w].end(), t);
                    if (had)
                        erase_from(in[t], w);
                    else
                        insert_into(in[t], w);
                }
                out[w] = std::move(updated);
            }
            // Drop x and y.
            for (auto s : in[x])
                erase_from(out[s], x);
            for (auto t : out[x])
                erase_from(in[t], x);
            for (auto s : in[y])
                erase_from(out[s], y);
            for (auto t : out[y])
                erase_from(in[t], y);
            out[x].clear();
            in[x].clear();
            out[y].clear();
            in[y].clear();
            alive[x] = false;
            alive[y] = false;
        }
    }

    ReducedComplex r;
    std::vector<std::uint32_t> new_index(n, 0);
    for (std::uint32_t i = 0; i < n; ++i) {
        if (!alive[i])
            continue;
        new_index[i] = static_cast<std::uint32_t>(r.original_index.size());
        r.original_index.push_back(i);
    }
    std::vector<FilteredGenerator> gens;
    std::vector<Column> cols;
    gens.reserve(r.original_index.size());
    cols.reserve(r.original_index.size());
    for (auto i : r.original_index) {
        gens.push_back(c.generator(i));
        Column col;
        for (auto t : out[i]) {
            if (!alive[t])
                throw InvariantViolation("cancellation left an arrow into a removed generator");
            col.push_back(new_index[t]);
        }
        cols.push_back(std::move(col));
    }
    r.complex = FilteredComplexF2(std::move(gens), std::move(cols));
    return r;
}

/// Tilde complex on the generators of Alexander grading >= a_min, with the
/// Alexander grading as filtration. The tilde differential preserves the
/// Alexander grading, so these levels are a direct summand; only they are
/// kept, which puts grids past the full-complex size within reach.
inline FilteredComplexF2 build_tilde_complex_above(const GridDiagram& g, int a_min, int size_cap = kDefaultSizeCap)
{
    require_knot(g);
    const int n = g.size();
    if (n > size_cap)
        throw CapExceeded("grid size " + std::to_string(n) + " exceeds the cap of " + std::to_string(size_cap));

    const GradingContext ctx(g);
    std::vector<Permutation> states;
    std::vector<FilteredGenerator> gens;
    std::unordered_map<std::uint32_t, std::uint32_t> local;
    Permutation x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        x[static_cast<std::size_t>(i)] = i;
    do {
        const int a = ctx.alexander(x);
        if (a < a_min)
            continue;
        local.emplace(permutation_rank(x), static_cast<std::uint32_t>(states.size()));
        states.push_back(x);
        gens.push_back({a, ctx.maslov(x)});
    } while (std::next_permutation(x.begin(), x.end()));

    const detail::MarkingHeights heights(g);
    std::vector<Column> cols(states.size());
    for (std::size_t j = 0; j < states.size(); ++j) {
        detail::for_each_o_free_rectangle(heights, states[j], [&](const Permutation& y, int x_marks) {
            if (x_marks != 0)
                return;
            const auto it = local.find(permutation_rank(y));
            if (it == local.end())
                throw InvariantViolation("tilde differential leaves its Alexander grading");
            cols[j].push_back(it->second);
        });
    }
    return FilteredComplexF2(std::move(gens), std::move(cols));
}

/// dim of the tilde homology at every (A, M) with A >= a_min.
inline std::map<Bigrading, std::size_t> tilde_homology_above(const GridDiagram& g, int a_min,
                                                            int size_cap = kDefaultSizeCap)
{
    const auto c = build_tilde_complex_above(g, a_min, size_cap);
    auto dims = cancel_filtration_preserving(c).complex.generator_counts();
    std::erase_if(dims, [](const auto& kv) { return kv.second == 0; });
    return dims;
}

} // namespace hfk
