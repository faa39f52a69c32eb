#pragma once

// Spectral sequence of a bounded filtered complex over F2, computed from the
// subquotient definition
//
//   Z^r_{p,q} = F_p C_{p+q} ∩ d^{-1}(F_{p-r} C_{p+q-1})
//   B^r_{p,q} = F_p C_{p+q} ∩ d(F_{p+r} C_{p+q+1})
//   E^r_{p,q} = Z^r_{p,q} / (Z^{r-1}_{p-1,q+1} + B^{r-1}_{p,q})
//
// Cells are keyed by (p, m) with m = p + q the homological grading. All
// subspaces of a cell live in the coordinates of C_m, indexed by the
// generators of homological grading m in increasing global order.

#include "hfkgrid/complex.hpp"
#include "hfkgrid/errors.hpp"
#include "hfkgrid/f2linalg.hpp"

#include <algorithm>
#include <climits>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace hfk {

/// Stands in for r = infinity in Z^r / B^r queries.
inline constexpr int kInfinitePage = INT_MAX;

struct PageCell {
    f2::Subspace cycles;        // Z^r_{p,q}
    f2::Subspace lower_cycles;  // Z^{r-1}_{p-1,q+1}
    f2::Subspace boundaries;    // B^{r-1}_{p,q}
    f2::QuotientSpace quotient; // E^r_{p,q}

    std::size_t dim() const noexcept { return quotient.dim(); }
};

struct Page {
    int r = 0; // kInfinitePage for E^infinity
    std::map<Bigrading, PageCell> cells;
    /// d^r out of each cell into (p - r, m - 1); rows index the target cell.
    /// Only present when both cells exist.
    std::map<Bigrading, f2::MatF2> differential;

    std::size_t dim(Bigrading cell) const
    {
        auto it = cells.find(cell);
        return it == cells.end() ? 0 : it->second.dim();
    }

    /// Nonzero cell dimensions.
    std::map<Bigrading, std::size_t> dims() const
    {
        std::map<Bigrading, std::size_t> out;
        for (const auto& [k, c] : cells)
            if (c.dim() > 0)
                out[k] = c.dim();
        return out;
    }

    std::size_t total_dim() const
    {
        std::size_t s = 0;
        for (const auto& [k, c] : cells)
            s += c.dim();
        return s;
    }
};

class SpectralPages {
public:
    /// Pages 0..r_max when r_max is given, otherwise 0..stabilization page.
    explicit SpectralPages(const FilteredComplexF2& c, std::optional<int> r_max = std::nullopt)
        : p_min_(c.p_min()), p_max_(c.p_max())
    {
        for (auto& [m, view] : detail::maslov_slices(c)) {
            auto& s = slices_[m];
            for (auto g : view.generators)
                s.levels.push_back(c.generator(g).filtration);
            s.view = std::move(view);
        }
        for (auto& [m, s] : slices_) {
            auto below = slices_.find(m - 1);
            s.boundary = detail::slice_boundary(c, &s.view, below == slices_.end() ? nullptr : &below->second.view);
        }
        for (const auto& [m, s] : slices_)
            for (int p : s.levels)
                cell_keys_.insert({p, m});

        infinity_ = build_page(kInfinitePage);
        const int last = r_max ? std::max(*r_max, 0) : width() + 1;
        for (int r = 0; r <= last; ++r) {
            pages_.push_back(build_page(r));
            if (r >= 1 && stabilization_ < 0 && pages_.back().dims() == infinity_.dims())
                stabilization_ = r;
            if (!r_max && stabilization_ >= 0)
                break;
        }
        if (!r_max && stabilization_ < 0)
            throw InvariantViolation("spectral sequence did not stabilise by page p_max - p_min + 1");
    }

    int p_min() const noexcept { return p_min_; }
    int p_max() const noexcept { return p_max_; }
    int width() const noexcept { return p_max_ - p_min_; }

    const std::vector<Page>& pages() const noexcept { return pages_; }
    const Page& page(int r) const { return pages_.at(static_cast<std::size_t>(r)); }
    int last_page() const noexcept { return static_cast<int>(pages_.size()) - 1; }
    const Page& infinity() const noexcept { return infinity_; }

    /// Smallest r >= 1 with dim E^r = dim E^infinity everywhere; -1 if the
    /// computed range ended first.
    int stabilization_page() const noexcept { return stabilization_; }

    std::vector<int> maslov_gradings() const
    {
        std::vector<int> ms;
        for (const auto& [m, s] : slices_)
            ms.push_back(m);
        return ms;
    }

    std::size_t slice_dim(int m) const
    {
        auto it = slices_.find(m);
        return it == slices_.end() ? 0 : it->second.view.generators.size();
    }

    /// Global generator indices of C_m in local coordinate order.
    const std::vector<std::uint32_t>& slice_generators(int m) const { return slices_.at(m).view.generators; }

    /// d restricted to C_m -> C_{m-1}, local coordinates.
    f2::MatF2 boundary(int m) const
    {
        auto it = slices_.find(m);
        if (it == slices_.end())
            return f2::MatF2(slice_dim(m - 1), 0);
        return it->second.boundary;
    }

    f2::Subspace filtration_subspace(int p, int m) const
    {
        auto it = slices_.find(m);
        if (it == slices_.end())
            return f2::Subspace(0);
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < it->second.levels.size(); ++i)
            if (it->second.levels[i] <= p)
                idx.push_back(i);
        return f2::Subspace::coordinate(it->second.levels.size(), idx);
    }

    /// Z^r_{p, m-p}; r may be kInfinitePage.
    f2::Subspace cycles(int r, int p, int m) const
    {
        const auto fp = filtration_subspace(p, m);
        const auto d = boundary(m);
        if (r == kInfinitePage)
            return f2::intersect(fp, f2::kernel(d));
        return f2::intersect(fp, f2::preimage(d, filtration_subspace(p - r, m - 1)));
    }

    /// B^r_{p, m-p}; r may be kInfinitePage.
    f2::Subspace boundaries(int r, int p, int m) const
    {
        const auto fp = filtration_subspace(p, m);
        const auto d = boundary(m + 1);
        if (r == kInfinitePage)
            return f2::intersect(fp, f2::image(d));
        return f2::intersect(fp, f2::apply(d, filtration_subspace(saturating_add(p, r), m + 1)));
    }

private:
    struct Slice {
        MaslovSlice view;
        std::vector<int> levels;
        f2::MatF2 boundary;
    };

    static int saturating_add(int a, int b) { return static_cast<int>(std::min<long long>(INT_MAX, static_cast<long long>(a) + b)); }

    Page build_page(int r) const
    {
        Page page;
        page.r = r;
        const int prev = r == kInfinitePage ? kInfinitePage : r - 1;
        for (const auto& key : cell_keys_) {
            const int p = key.a;
            const int m = key.m;
            PageCell cell;
            cell.cycles = cycles(r, p, m);
            cell.lower_cycles = cycles(prev, p - 1, m);
            cell.boundaries = boundaries(prev, p, m);
            cell.quotient = f2::quotient(cell.cycles, f2::sum(cell.lower_cycles, cell.boundaries));
            page.cells.emplace(key, std::move(cell));
        }
        if (r == kInfinitePage)
            return page;

        for (const auto& [key, cell] : page.cells) {
            const Bigrading target{key.a - r, key.m - 1};
            auto t = page.cells.find(target);
            const auto d = boundary(key.m);
            f2::MatF2 mat(t == page.cells.end() ? 0 : t->second.dim(), cell.dim());
            auto project = [&](const f2::VecF2& w, const char* what) {
                f2::VecF2 coords;
                if (t == page.cells.end()) {
                    // No generators at the target: the class must already vanish.
                    if (!filtration_subspace(target.a - 1, target.m).contains(w) && !w.is_zero())
                        throw InvariantViolation(std::string("page differential: ") + what);
                    return coords;
                }
                if (!t->second.quotient.try_project(w, coords))
                    throw InvariantViolation(std::string("page differential lands outside Z^r: ") + what);
                return coords;
            };
            const auto& reps = cell.quotient.representatives();
            for (std::size_t j = 0; j < reps.size(); ++j) {
                const auto coords = project(d * reps[j], "representative");
                for (std::size_t i : coords.support())
                    mat.set(i, j);
            }
            // Well-definedness: the denominator must map to zero.
            for (const auto& sub : {cell.lower_cycles, cell.boundaries}) {
                for (const auto& v : sub.basis()) {
                    const auto coords = project(d * v, "denominator");
                    if (!coords.is_zero())
                        throw InvariantViolation("page differential is not well defined on E^" + std::to_string(r));
                }
            }
            if (t != page.cells.end())
                page.differential.emplace(key, std::move(mat));
        }
        return page;
    }

    int p_min_;
    int p_max_;
    std::map<int, Slice> slices_;
    std::set<Bigrading> cell_keys_;
    std::vector<Page> pages_;
    Page infinity_;
    int stabilization_ = -1;
};

inline SpectralPages compute_pages(const FilteredComplexF2& c, std::optional<int> r_max = std::nullopt)
{
    return SpectralPages(c, r_max);
}

/// dim ker d^r - dim im d^r at every cell of page r.
inline std::map<Bigrading, std::size_t> page_homology_dims(const Page& page)
{
    std::map<Bigrading, std::size_t> out;
    for (const auto& [key, cell] : page.cells) {
        std::size_t rank_out = 0;
        if (auto it = page.differential.find(key); it != page.differential.end())
            rank_out = f2::rank(it->second);
        std::size_t rank_in = 0;
        if (auto it = page.differential.find({key.a + page.r, key.m + 1}); it != page.differential.end())
            rank_in = f2::rank(it->second);
        const std::size_t h = cell.dim() - rank_out - rank_in;
        if (h > 0)
            out[key] = h;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Total homology and its induced filtration, computed without pages.

/// dim F_p H_m(C) = dim((cycles of F_p C_m) + B_m) - dim B_m, from the kernel
/// of d restricted to the columns of F_p C_m.
inline std::map<Bigrading, std::size_t> filtered_homology_dims(const FilteredComplexF2& c)
{
    const auto slices = detail::maslov_slices(c);
    std::map<Bigrading, std::size_t> out;
    for (const auto& [m, s] : slices) {
        auto below = slices.find(m - 1);
        auto above = slices.find(m + 1);
        const f2::MatF2 d_out = detail::slice_boundary(c, &s, below == slices.end() ? nullptr : &below->second);
        const f2::MatF2 d_in = detail::slice_boundary(c, above == slices.end() ? nullptr : &above->second, &s);
        const f2::Subspace b = above == slices.end() ? f2::Subspace(s.generators.size()) : f2::image(d_in);
        std::vector<int> levels;
        for (auto g : s.generators)
            levels.push_back(c.generator(g).filtration);
        std::vector<int> ps = levels;
        std::sort(ps.begin(), ps.end());
        ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
        for (int p : ps) {
            std::vector<std::size_t> cols;
            for (std::size_t j = 0; j < levels.size(); ++j)
                if (levels[j] <= p)
                    cols.push_back(j);
            // Restrict d to the columns of F_p, take its kernel, embed back.
            std::vector<f2::VecF2> restricted;
            const f2::MatF2 t = d_out.transpose();
            for (auto j : cols)
                restricted.push_back(t.row(j));
            const f2::MatF2 sub = f2::MatF2::from_row_vectors(d_out.rows(), restricted).transpose();
            std::vector<f2::VecF2> cycles;
            const auto ker = f2::kernel(sub);
            for (const auto& k : ker.basis()) {
                f2::VecF2 v(levels.size());
                for (auto i : k.support())
                    v.set(cols[i]);
                cycles.push_back(std::move(v));
            }
            const auto zf = f2::Subspace::span(levels.size(), cycles);
            out[{p, m}] = f2::sum(zf, b).dim() - b.dim();
        }
    }
    return out;
}

/// dim F_p H_m / F_{p-1} H_m, nonzero entries only.
inline std::map<Bigrading, std::size_t> homology_subquotient_dims(const FilteredComplexF2& c)
{
    const auto f = filtered_homology_dims(c);
    std::map<Bigrading, std::size_t> out;
    std::map<int, std::size_t> previous;
    for (const auto& [k, d] : f) { // ordered by p, then m
        const std::size_t before = previous.count(k.m) ? previous[k.m] : 0;
        if (d < before)
            throw InvariantViolation("induced filtration on homology is not increasing");
        if (d > before)
            out[k] = d - before;
        previous[k.m] = d;
    }
    return out;
}

struct EInfinityReport {
    bool ok = true;
    std::map<Bigrading, std::size_t> from_pages;
    std::map<Bigrading, std::size_t> from_homology;
};

/// Compares E^infinity with the associated graded of the induced filtration
/// on H(C).
inline EInfinityReport e_infinity_check(const FilteredComplexF2& c, const SpectralPages& pages)
{
    EInfinityReport rep;
    rep.from_pages = pages.infinity().dims();
    rep.from_homology = homology_subquotient_dims(c);
    rep.ok = rep.from_pages == rep.from_homology;
    return rep;
}

inline EInfinityReport e_infinity_check(const FilteredComplexF2& c) { return e_infinity_check(c, compute_pages(c)); }

// ---------------------------------------------------------------------------
// tau

/// Filtration level of the homological-degree-0 class on E^infinity.
inline int tau(const SpectralPages& pages)
{
    std::size_t total = 0;
    int level = 0;
    for (const auto& [k, cell] : pages.infinity().cells) {
        if (k.m != 0 || cell.dim() == 0)
            continue;
        total += cell.dim();
        level = k.a;
    }
    if (total != 1)
        throw DomainError("tau: homology in Maslov grading 0 has dimension " + std::to_string(total) + ", expected 1");
    return level;
}

inline int tau(const FilteredComplexF2& c) { return tau(compute_pages(c)); }

/// min { p : H(F_p C) -> H(C) nonzero }
inline int naive_tau(const FilteredComplexF2& c)
{
    std::optional<int> best;
    for (const auto& [k, d] : filtered_homology_dims(c))
        if (d > 0 && (!best || k.a < *best))
            best = k.a;
    if (!best)
        throw DomainError("naive_tau: complex is acyclic");
    return *best;
}

// ---------------------------------------------------------------------------
// Survival of E^1 classes

/// Direct sum of page cells laid out one after another.
struct CellLayout {
    std::vector<Bigrading> cells;
    std::map<Bigrading, std::size_t> offset;
    std::size_t dim = 0;

    static CellLayout of(const Page& page)
    {
        CellLayout l;
        for (const auto& [k, c] : page.cells) {
            l.cells.push_back(k);
            l.offset[k] = l.dim;
            l.dim += c.dim();
        }
        return l;
    }

    /// Coordinates belonging to one cell.
    std::vector<std::size_t> coordinates(Bigrading cell, std::size_t cell_dim) const
    {
        std::vector<std::size_t> idx;
        auto it = offset.find(cell);
        if (it == offset.end())
            return idx;
        for (std::size_t i = 0; i < cell_dim; ++i)
            idx.push_back(it->second + i);
        return idx;
    }
};

struct SurvivalData {
    CellLayout e1;
    CellLayout e_infinity;
    /// E^1 classes that are cycles on every page (the set A).
    f2::Subspace alive;
    /// Limit of each alive basis vector, in E^infinity coordinates.
    std::vector<f2::VecF2> limits;
    /// dim of the classes still represented by Z^r, for r = 1, 2, ...
    std::vector<std::size_t> alive_dims_by_page;
    /// E^infinity coordinate of the Maslov-0 class, when it is unique.
    std::optional<std::size_t> distinguished;
    std::optional<Bigrading> distinguished_cell;

    /// Image on E^infinity of an alive E^1 vector.
    f2::VecF2 to_infinity(const f2::VecF2& x) const
    {
        if (!alive.contains(x))
            throw DomainError("to_infinity: class does not survive the spectral sequence");
        f2::VecF2 out(e_infinity.dim);
        const auto& piv = alive.pivot_cols();
        for (std::size_t k = 0; k < piv.size(); ++k)
            if (x[piv[k]])
                out ^= limits[k];
        return out;
    }

    /// Component at the distinguished class (false when there is none).
    bool hits_distinguished(const f2::VecF2& x) const
    {
        return distinguished && to_infinity(x)[*distinguished];
    }
};

inline SurvivalData survival(const SpectralPages& pages)
{
    if (pages.last_page() < 1)
        throw DomainError("survival: the E^1 page has not been computed");
    SurvivalData s;
    const Page& e1 = pages.page(1);
    const Page& inf = pages.infinity();
    s.e1 = CellLayout::of(e1);
    s.e_infinity = CellLayout::of(inf);

    // Alive classes by page: image of Z^r in E^1.
    for (int r = 1; r <= pages.last_page(); ++r) {
        std::vector<f2::VecF2> images;
        for (const auto& [k, cell] : pages.page(r).cells) {
            const auto& q1 = e1.cells.at(k).quotient;
            for (const auto& z : cell.cycles.basis()) {
                f2::VecF2 v(s.e1.dim);
                for (auto i : q1.project(z).support())
                    v.set(s.e1.offset.at(k) + i);
                images.push_back(std::move(v));
            }
        }
        s.alive_dims_by_page.push_back(f2::Subspace::span(s.e1.dim, images).dim());
    }

    // Pair each Z^infinity vector's E^1 class with its E^infinity class and
    // eliminate on the E^1 half first.
    f2::detail::EchelonBasis e(s.e1.dim + s.e_infinity.dim);
    for (const auto& [k, cell] : inf.cells) {
        const auto& q1 = e1.cells.at(k).quotient;
        for (const auto& z : cell.cycles.basis()) {
            f2::VecF2 left(s.e1.dim);
            for (auto i : q1.project(z).support())
                left.set(s.e1.offset.at(k) + i);
            f2::VecF2 right(s.e_infinity.dim);
            for (auto i : cell.quotient.project(z).support())
                right.set(s.e_infinity.offset.at(k) + i);
            e.insert(left.concat(right));
        }
    }
    std::vector<f2::VecF2> alive_basis;
    for (const auto& row : e.rref()) {
        if (row.leading() >= s.e1.dim) {
            if (!row.slice(s.e1.dim, s.e_infinity.dim).is_zero())
                throw InvariantViolation("survival: E^1 -> E^infinity limit map is not well defined");
            continue;
        }
        alive_basis.push_back(row.slice(0, s.e1.dim));
        s.limits.push_back(row.slice(s.e1.dim, s.e_infinity.dim));
    }
    s.alive = f2::Subspace::span(s.e1.dim, alive_basis);
    if (s.alive.basis() != alive_basis)
        throw InvariantViolation("survival: alive basis is not in canonical form");
    if (!s.alive_dims_by_page.empty() && s.alive_dims_by_page.back() != s.alive.dim())
        throw InvariantViolation("survival: last page does not agree with Z^infinity");

    std::size_t m0 = 0;
    for (const auto& [k, cell] : inf.cells) {
        if (k.m != 0 || cell.dim() == 0)
            continue;
        m0 += cell.dim();
        s.distinguished = s.e_infinity.offset.at(k);
        s.distinguished_cell = k;
    }
    if (m0 != 1) {
        s.distinguished.reset();
        s.distinguished_cell.reset();
    }
    return s;
}

/// offset + direction, or the empty set.
struct AffineSet {
    bool empty = true;
    f2::VecF2 offset;
    f2::Subspace direction;
};

struct ASets {
    f2::Subspace all;      // A
    f2::Subspace zero;     // A_0
    AffineSet one;         // A_1
    AffineSet one_prime;   // A_1' = A_1 ∩ E^1_{(tau, 0)}
    std::optional<Bigrading> distinguished_cell;
};

inline ASets a_sets(const SurvivalData& s)
{
    ASets a;
    a.all = s.alive;
    a.distinguished_cell = s.distinguished_cell;
    const auto& basis = s.alive.basis();

    std::vector<bool> phi(basis.size(), false);
    if (s.distinguished)
        for (std::size_t k = 0; k < basis.size(); ++k)
            phi[k] = s.limits[k][*s.distinguished];

    auto first_one = std::find(phi.begin(), phi.end(), true);
    if (first_one == phi.end()) {
        a.zero = s.alive;
        a.one.direction = s.alive;
        a.one_prime.direction = s.alive;
        return a;
    }
    const std::size_t k0 = static_cast<std::size_t>(first_one - phi.begin());
    std::vector<f2::VecF2> zero_basis;
    for (std::size_t k = 0; k < basis.size(); ++k) {
        if (k == k0)
            continue;
        zero_basis.push_back(phi[k] ? basis[k] + basis[k0] : basis[k]);
    }
    a.zero = f2::Subspace::span(s.e1.dim, zero_basis);
    a.one = {false, basis[k0], a.zero};

    // A_1' lives in the E^1 cell of the distinguished class.
    const Bigrading cell = *s.distinguished_cell;
    std::size_t cell_dim = 0;
    for (std::size_t i = 0; i < s.e1.cells.size(); ++i) {
        if (s.e1.cells[i] != cell)
            continue;
        const std::size_t end = i + 1 < s.e1.cells.size() ? s.e1.offset.at(s.e1.cells[i + 1]) : s.e1.dim;
        cell_dim = end - s.e1.offset.at(cell);
    }
    const auto cell_space = f2::Subspace::coordinate(s.e1.dim, s.e1.coordinates(cell, cell_dim));
    const auto alive_here = f2::intersect(s.alive, cell_space);
    a.one_prime.direction = f2::intersect(a.zero, cell_space);
    for (const auto& v : alive_here.basis()) {
        if (s.hits_distinguished(v)) {
            a.one_prime = {false, v, a.one_prime.direction};
            break;
        }
    }
    return a;
}

/// Checks A_0 is a linear subspace of A on which the limit vanishes at the
/// distinguished class, and A_1 = offset + A_0 with limit 1 there.
inline bool verify_a_sets(const SurvivalData& s, const ASets& a)
{
    if (!a.all.contains(a.zero))
        return false;
    for (const auto& v : a.zero.basis())
        if (s.hits_distinguished(v))
            return false;
    if (a.one.empty)
        return a.zero == a.all;
    if (!a.all.contains(a.one.offset) || !s.hits_distinguished(a.one.offset))
        return false;
    if (a.one.direction != a.zero || a.zero.dim() + 1 != a.all.dim())
        return false;
    for (const auto& v : a.zero.basis())
        if (!s.hits_distinguished(a.one.offset + v))
            return false;
    if (!a.one_prime.empty) {
        if (!s.hits_distinguished(a.one_prime.offset) || !a.zero.contains(a.one_prime.direction))
            return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Filtered maps

class FilteredMap {
public:
    /// matrix: rows index target generators, columns source generators.
    /// Throws InvariantViolation unless the map is a degree-0 filtered chain map.
    FilteredMap(std::shared_ptr<const FilteredComplexF2> source, std::shared_ptr<const FilteredComplexF2> target,
                f2::MatF2 matrix)
        : source_(std::move(source)), target_(std::move(target)), matrix_(std::move(matrix))
    {
        if (matrix_.rows() != target_->size() || matrix_.cols() != source_->size())
            throw DimensionMismatch("FilteredMap: matrix shape does not match the complexes");
        for (std::size_t j = 0; j < source_->size(); ++j) {
            for (std::size_t i = 0; i < target_->size(); ++i) {
                if (!matrix_.get(i, j))
                    continue;
                if (target_->generator(i).maslov != source_->generator(j).maslov)
                    throw InvariantViolation("FilteredMap: map does not preserve the homological grading");
                if (target_->generator(i).filtration > source_->generator(j).filtration)
                    throw InvariantViolation("FilteredMap: map raises the filtration");
            }
        }
        if (!(matrix_ * source_->dense_boundary() == target_->dense_boundary() * matrix_))
            throw InvariantViolation("FilteredMap: map does not commute with the boundaries");
    }

    const FilteredComplexF2& source() const noexcept { return *source_; }
    const FilteredComplexF2& target() const noexcept { return *target_; }
    const f2::MatF2& matrix() const noexcept { return matrix_; }

    /// The map C_m -> Cbar_m in slice coordinates of the two page objects.
    f2::MatF2 slice_matrix(const SpectralPages& src, const SpectralPages& dst, int m) const
    {
        const std::size_t cols = src.slice_dim(m);
        const std::size_t rows = dst.slice_dim(m);
        f2::MatF2 out(rows, cols);
        if (cols == 0 || rows == 0)
            return out;
        const auto& sg = src.slice_generators(m);
        const auto& tg = dst.slice_generators(m);
        for (std::size_t j = 0; j < cols; ++j)
            for (std::size_t i = 0; i < rows; ++i)
                if (matrix_.get(tg[i], sg[j]))
                    out.set(i, j);
        return out;
    }

private:
    std::shared_ptr<const FilteredComplexF2> source_;
    std::shared_ptr<const FilteredComplexF2> target_;
    f2::MatF2 matrix_;
};

struct InducedMorphism {
    SpectralPages source_pages;
    SpectralPages target_pages;
    /// f^r per cell, rows index the target cell.
    std::vector<std::map<Bigrading, f2::MatF2>> pages;
    std::map<Bigrading, f2::MatF2> infinity;
    /// H(f) on H_m, in the coordinates of the homology quotients.
    std::map<int, f2::MatF2> homology;

    std::size_t homology_rank() const
    {
        std::size_t r = 0;
        for (const auto& [m, mat] : homology)
            r += f2::rank(mat);
        return r;
    }

    /// Rank of f^infinity summed over the cells of filtration p.
    std::size_t infinity_rank_at(int p) const
    {
        std::size_t r = 0;
        for (const auto& [k, mat] : infinity)
            if (k.a == p)
                r += f2::rank(mat);
        return r;
    }
};

namespace detail {

/// The map a page cell induces, in quotient coordinates.
inline f2::MatF2 induced_on_cell(const PageCell& src, const PageCell* dst, const f2::MatF2& slice_map,
                                 const char* where)
{
    const auto& reps = src.quotient.representatives();
    f2::MatF2 out(dst ? dst->dim() : 0, reps.size());
    for (std::size_t j = 0; j < reps.size(); ++j) {
        const auto w = slice_map * reps[j];
        if (!dst)
            continue;
        f2::VecF2 coords;
        if (!dst->quotient.try_project(w, coords))
            throw InvariantViolation(std::string("induced map leaves Z^r at ") + where);
        for (auto i : coords.support())
            out.set(i, j);
    }
    // Denominator must die.
    if (dst) {
        for (const auto& sub : {src.lower_cycles, src.boundaries})
            for (const auto& v : sub.basis())
                if (!dst->quotient.project(slice_map * v).is_zero())
                    throw InvariantViolation(std::string("induced map is not well defined at ") + where);
    }
    return out;
}

} // namespace detail

/// f^r on every page, f^infinity and H(f). Verifies f^r d^r = dbar^r f^r and
/// that f^{r+1} is the map H(f^r) under E^{r+1} = H(E^r).
inline InducedMorphism induced_morphism(const FilteredMap& f)
{
    const int last = std::max(f.source().p_max() - f.source().p_min(), f.target().p_max() - f.target().p_min()) + 2;
    InducedMorphism out{SpectralPages(f.source(), last), SpectralPages(f.target(), last), {}, {}, {}};
    const auto& sp = out.source_pages;
    const auto& tp = out.target_pages;

    std::map<int, f2::MatF2> slice_maps;
    for (int m : sp.maslov_gradings())
        slice_maps.emplace(m, f.slice_matrix(sp, tp, m));

    for (int r = 0; r <= last; ++r) {
        const Page& src = sp.page(r);
        const Page& dst = tp.page(r);
        std::map<Bigrading, f2::MatF2> maps;
        for (const auto& [k, cell] : src.cells) {
            auto t = dst.cells.find(k);
            maps.emplace(k, detail::induced_on_cell(cell, t == dst.cells.end() ? nullptr : &t->second,
                                                    slice_maps.at(k.m), "page"));
        }
        // f^r d^r = dbar^r f^r, cell by cell.
        for (const auto& [k, cell] : src.cells) {
            const Bigrading tk{k.a - r, k.m - 1};
            const std::size_t dst_target_dim = dst.dim(tk);
            f2::MatF2 lhs(dst_target_dim, cell.dim());
            f2::MatF2 rhs(dst_target_dim, cell.dim());
            if (auto d = src.differential.find(k); d != src.differential.end() && maps.count(tk))
                lhs = maps.at(tk) * d->second;
            if (auto d = dst.differential.find(k); d != dst.differential.end() && dst.cells.count(k))
                rhs = d->second * maps.at(k);
            if (!(lhs == rhs))
                throw InvariantViolation("induced map does not commute with d^" + std::to_string(r));
        }
        out.pages.push_back(std::move(maps));
    }

    // f^{r+1} agrees with H(f^r): for a representative z of E^{r+1}, the
    // E^r class of a lift of f^{r+1}[z] differs from f^r[z] by a boundary.
    for (int r = 0; r < last; ++r) {
        const Page& src_next = sp.page(r + 1);
        const Page& dst_now = tp.page(r);
        const Page& dst_next = tp.page(r + 1);
        for (const auto& [k, cell] : src_next.cells) {
            auto tnext = dst_next.cells.find(k);
            auto tnow = dst_now.cells.find(k);
            if (tnow == dst_now.cells.end())
                continue;
            // Image of dbar^r into this cell.
            std::vector<f2::VecF2> im;
            if (auto d = dst_now.differential.find({k.a + r, k.m + 1}); d != dst_now.differential.end())
                for (std::size_t j = 0; j < d->second.cols(); ++j)
                    im.push_back(d->second.column(j));
            const auto boundaries = f2::Subspace::span(tnow->second.dim(), im);
            const auto& fnext = out.pages[static_cast<std::size_t>(r + 1)].at(k);
            const auto& reps = cell.quotient.representatives();
            for (std::size_t j = 0; j < reps.size(); ++j) {
                const auto direct = tnow->second.quotient.project(slice_maps.at(k.m) * reps[j]);
                f2::VecF2 via(tnow->second.dim());
                if (tnext != dst_next.cells.end())
                    via = tnow->second.quotient.project(tnext->second.quotient.lift(fnext.column(j)));
                if (!boundaries.contains(direct + via))
                    throw InvariantViolation("f^" + std::to_string(r + 1) + " is not induced by f^" + std::to_string(r));
            }
        }
    }

    for (const auto& [k, cell] : sp.infinity().cells) {
        auto t = tp.infinity().cells.find(k);
        out.infinity.emplace(k, detail::induced_on_cell(cell, t == tp.infinity().cells.end() ? nullptr : &t->second,
                                                        slice_maps.at(k.m), "E^infinity"));
    }

    for (int m : sp.maslov_gradings()) {
        const auto hs = f2::quotient(f2::kernel(sp.boundary(m)), f2::image(sp.boundary(m + 1)));
        const auto ht = f2::quotient(f2::kernel(tp.boundary(m)), f2::image(tp.boundary(m + 1)));
        f2::MatF2 h(ht.dim(), hs.dim());
        const auto& reps = hs.representatives();
        for (std::size_t j = 0; j < reps.size(); ++j)
            for (auto i : ht.project(slice_maps.at(m) * reps[j]).support())
                h.set(i, j);
        out.homology.emplace(m, std::move(h));
    }
    return out;
}

struct LemmaReviewVerdict {
    enum class Outcome {
        Holds,           // hypotheses and conclusion hold
        HypothesisFails, // at least one hypothesis fails; nothing is claimed
        Contradiction    // hypotheses hold but the conclusion fails (a bug)
    };
    Outcome outcome = Outcome::Holds;
    bool homology_is_f2 = false;
    bool tau_equal = false;
    bool homology_map_iso = false;
    bool conclusion = false;
    std::optional<int> tau_source;
    std::optional<int> tau_target;
    std::vector<std::string> failed_hypotheses;
};

/// If H(C) = H(Cbar) = F2, tau(C) = tau(Cbar) and H(f) is an isomorphism,
/// then f^infinity restricted to filtration tau is an isomorphism. Reports
/// which hypothesis fails when the premise does not hold.
inline LemmaReviewVerdict lemma_review_check(const FilteredMap& f)
{
    LemmaReviewVerdict v;
    const auto mor = induced_morphism(f);
    auto total = [](const SpectralPages& p) { return p.infinity().total_dim(); };
    v.homology_is_f2 = total(mor.source_pages) == 1 && total(mor.target_pages) == 1;
    if (total(mor.source_pages) > 0)
        v.tau_source = naive_tau(f.source());
    if (total(mor.target_pages) > 0)
        v.tau_target = naive_tau(f.target());
    v.tau_equal = v.tau_source && v.tau_target && *v.tau_source == *v.tau_target;
    v.homology_map_iso = v.homology_is_f2 && mor.homology_rank() == 1;

    if (!v.homology_is_f2)
        v.failed_hypotheses.push_back("H(C) and H(Cbar) are both one-dimensional");
    if (!v.tau_equal)
        v.failed_hypotheses.push_back("tau(C) = tau(Cbar)");
    if (!v.homology_map_iso)
        v.failed_hypotheses.push_back("H(f) is an isomorphism");

    if (v.tau_source) {
        std::size_t src_dim = 0;
        std::size_t dst_dim = 0;
        for (const auto& [k, c] : mor.source_pages.infinity().cells)
            if (k.a == *v.tau_source)
                src_dim += c.dim();
        for (const auto& [k, c] : mor.target_pages.infinity().cells)
            if (k.a == *v.tau_source)
                dst_dim += c.dim();
        v.conclusion = src_dim == dst_dim && mor.infinity_rank_at(*v.tau_source) == src_dim && src_dim > 0;
    }

    if (!v.failed_hypotheses.empty())
        v.outcome = LemmaReviewVerdict::Outcome::HypothesisFails;
    else
        v.outcome = v.conclusion ? LemmaReviewVerdict::Outcome::Holds : LemmaReviewVerdict::Outcome::Contradiction;
    return v;
}

} // namespace hfk
