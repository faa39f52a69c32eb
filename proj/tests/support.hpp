#pragma once

// Shared test helpers: brute-force linear algebra oracles and random
// filtered complexes with a known decomposition.

#include "hfkgrid/complex.hpp"
#include "hfkgrid/f2linalg.hpp"
#include "hfkgrid/grid.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace testing_support {

using hfk::f2::MatF2;
using hfk::f2::Subspace;
using hfk::f2::VecF2;

inline std::string data_path(const std::string& rel) { return std::string(HFKGRID_DATA_DIR) + "/" + rel; }

// ---------------------------------------------------------------------------
// Vectors as bitmasks (ambient dimension <= 16)

inline std::uint32_t mask_of(const VecF2& v)
{
    std::uint32_t m = 0;
    for (auto i : v.support())
        m |= 1U << i;
    return m;
}

inline VecF2 vec_of(std::uint32_t mask, std::size_t dim)
{
    VecF2 v(dim);
    for (std::size_t i = 0; i < dim; ++i)
        if ((mask >> i) & 1U)
            v.set(i);
    return v;
}

/// Every element of span(vectors), by closure.
inline std::set<std::uint32_t> span_set(const std::vector<VecF2>& vectors)
{
    std::set<std::uint32_t> s{0};
    for (const auto& v : vectors) {
        const auto m = mask_of(v);
        std::set<std::uint32_t> next = s;
        for (auto x : s)
            next.insert(x ^ m);
        s = std::move(next);
    }
    return s;
}

inline std::set<std::uint32_t> elements(const Subspace& s) { return span_set(s.basis()); }

/// log2 of a power-of-two set size.
inline std::size_t dim_of(const std::set<std::uint32_t>& s)
{
    std::size_t d = 0;
    while ((std::size_t{1} << d) < s.size())
        ++d;
    return d;
}

inline std::uint32_t apply_mask(const MatF2& m, std::uint32_t x)
{
    std::uint32_t out = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        bool bit = false;
        for (std::size_t j = 0; j < m.cols(); ++j)
            bit ^= m.get(i, j) && ((x >> j) & 1U);
        if (bit)
            out |= 1U << i;
    }
    return out;
}

/// Rank by plain Gaussian elimination on bool rows.
inline std::size_t naive_rank(std::vector<std::vector<bool>> rows)
{
    std::size_t rank = 0;
    const std::size_t cols = rows.empty() ? 0 : rows[0].size();
    for (std::size_t c = 0; c < cols && rank < rows.size(); ++c) {
        std::size_t pivot = rank;
        while (pivot < rows.size() && !rows[pivot][c])
            ++pivot;
        if (pivot == rows.size())
            continue;
        std::swap(rows[pivot], rows[rank]);
        for (std::size_t r = 0; r < rows.size(); ++r)
            if (r != rank && rows[r][c])
                for (std::size_t k = 0; k < cols; ++k)
                    rows[r][k] = rows[r][k] != rows[rank][k];
        ++rank;
    }
    return rank;
}

inline std::vector<std::vector<bool>> to_bool_rows(const MatF2& m)
{
    std::vector<std::vector<bool>> out(m.rows(), std::vector<bool>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            out[i][j] = m.get(i, j);
    return out;
}

inline MatF2 random_matrix(std::mt19937& rng, std::size_t rows, std::size_t cols, double density = 0.5)
{
    std::bernoulli_distribution bit(density);
    MatF2 m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            if (bit(rng))
                m.set(i, j);
    return m;
}

inline std::vector<VecF2> random_vectors(std::mt19937& rng, std::size_t count, std::size_t dim, double density = 0.5)
{
    std::bernoulli_distribution bit(density);
    std::vector<VecF2> out;
    for (std::size_t k = 0; k < count; ++k) {
        VecF2 v(dim);
        for (std::size_t i = 0; i < dim; ++i)
            if (bit(rng))
                v.set(i);
        out.push_back(std::move(v));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Filtered complexes

inline std::vector<hfk::Column> columns_of(const MatF2& d)
{
    std::vector<hfk::Column> cols(d.cols());
    for (std::size_t j = 0; j < d.cols(); ++j)
        for (std::size_t i = 0; i < d.rows(); ++i)
            if (d.get(i, j))
                cols[j].push_back(static_cast<std::uint32_t>(i));
    return cols;
}

inline hfk::FilteredComplexF2 complex_from_dense(const std::vector<hfk::FilteredGenerator>& gens, const MatF2& d)
{
    return hfk::FilteredComplexF2(gens, columns_of(d));
}

/// Inverse of an invertible square matrix by Gauss-Jordan on bool rows.
inline MatF2 naive_inverse(const MatF2& m)
{
    const std::size_t n = m.rows();
    auto a = to_bool_rows(m);
    std::vector<std::vector<bool>> inv(n, std::vector<bool>(n));
    for (std::size_t i = 0; i < n; ++i)
        inv[i][i] = true;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && !a[p][c])
            ++p;
        if (p == n)
            throw std::runtime_error("naive_inverse: singular");
        std::swap(a[p], a[c]);
        std::swap(inv[p], inv[c]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || !a[r][c])
                continue;
            for (std::size_t k = 0; k < n; ++k) {
                a[r][k] = a[r][k] != a[c][k];
                inv[r][k] = inv[r][k] != inv[c][k];
            }
        }
    }
    MatF2 out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (inv[i][j])
                out.set(i, j);
    return out;
}

/// A filtered complex built as a direct sum of singletons and arrows x -> y
/// (drop = p(x) - p(y) >= 0), then disguised by a random filtered
/// unitriangular change of basis. The summands give the page dimensions
/// independently: an arrow of drop k lives on pages 0..k and nowhere after.
struct KnownComplex {
    std::vector<hfk::FilteredGenerator> gens;
    MatF2 boundary;
    MatF2 change;        // columns: new basis in old coordinates
    MatF2 change_inverse;
    std::vector<std::pair<std::size_t, std::size_t>> arrows; // (x, y) before the change of basis
    std::vector<std::size_t> singletons;

    hfk::FilteredComplexF2 complex() const { return complex_from_dense(gens, boundary); }

    /// dim E^r at (p, m) from the summands; r >= 1000 means E^infinity.
    std::map<hfk::Bigrading, std::size_t> page_dims(int r) const
    {
        std::map<hfk::Bigrading, std::size_t> out;
        auto add = [&](std::size_t g) { ++out[{gens[g].filtration, gens[g].maslov}]; };
        for (auto s : singletons)
            add(s);
        for (const auto& [x, y] : arrows) {
            if (gens[x].filtration - gens[y].filtration >= r) {
                add(x);
                add(y);
            }
        }
        return out;
    }

    std::map<hfk::Bigrading, std::size_t> infinity_dims() const { return page_dims(1 << 20); }
};

/// Up to max_gens generators, filtration levels in [0, width], Maslov in [-2, 2].
inline KnownComplex random_known_complex(std::mt19937& rng, std::size_t max_gens, int width,
                                         bool allow_singletons = true)
{
    std::uniform_int_distribution<int> level(0, width);
    std::uniform_int_distribution<int> maslov(-2, 2);
    std::uniform_int_distribution<std::size_t> count(1, max_gens);
    std::bernoulli_distribution coin(0.5);

    KnownComplex k;
    const std::size_t target = count(rng);
    while (k.gens.size() < target) {
        const int m = maslov(rng);
        if (k.gens.size() + 2 <= target && (!allow_singletons || coin(rng))) {
            const int px = level(rng);
            const int py = std::uniform_int_distribution<int>(0, px)(rng);
            k.arrows.emplace_back(k.gens.size(), k.gens.size() + 1);
            k.gens.push_back({px, m});
            k.gens.push_back({py, m - 1});
        }
        else if (allow_singletons) {
            k.singletons.push_back(k.gens.size());
            k.gens.push_back({level(rng), m});
        }
        else {
            break;
        }
    }
    const std::size_t n = k.gens.size();
    MatF2 d(n, n);
    for (const auto& [x, y] : k.arrows)
        d.set(y, x);

    // P = I + N with N(i, j) allowed when i < j, same Maslov grading and
    // p(i) <= p(j); P and its inverse preserve the filtration.
    MatF2 p = MatF2::identity(n);
    std::bernoulli_distribution bit(0.4);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (k.gens[i].maslov == k.gens[j].maslov && k.gens[i].filtration <= k.gens[j].filtration && bit(rng))
                p.set(i, j);
    k.change = p;
    k.change_inverse = naive_inverse(p);
    k.boundary = k.change_inverse * d * p;
    return k;
}

} // namespace testing_support
