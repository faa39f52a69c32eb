#pragma once

// Bit-packed linear algebra over the two-element field.
//
// Vectors pack 64 coordinates per word, coordinate i living in bit (i % 64) of
// word (i / 64). Matrices are row-major arrays of packed rows and represent
// maps F2^cols -> F2^rows. Subspaces are always kept in reduced row echelon
// form, with the pivot of a row being its lowest set coordinate, so that two
// subspaces are equal exactly when their bases are bitwise equal.

#include "hfkgrid/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hfk::f2 {

using Word = std::uint64_t;
inline constexpr std::size_t kWordBits = 64;

class VecF2 {
public:
    VecF2() = default;
    explicit VecF2(std::size_t dim) : dim_(dim), words_((dim + kWordBits - 1) / kWordBits, 0) {}

    static VecF2 unit(std::size_t dim, std::size_t i)
    {
        VecF2 v(dim);
        v.set(i);
        return v;
    }

    /// "101" -> coordinates 0 and 2 set.
    static VecF2 from_string(std::string_view bits)
    {
        VecF2 v(bits.size());
        for (std::size_t i = 0; i < bits.size(); ++i) {
            if (bits[i] == '1')
                v.set(i);
            else if (bits[i] != '0')
                throw Error("VecF2::from_string: expected '0' or '1'");
        }
        return v;
    }

    std::size_t dim() const noexcept { return dim_; }
    std::span<const Word> words() const noexcept { return words_; }

    bool operator[](std::size_t i) const noexcept { return (words_[i / kWordBits] >> (i % kWordBits)) & 1U; }

    void set(std::size_t i, bool value = true) noexcept
    {
        const Word mask = Word{1} << (i % kWordBits);
        if (value)
            words_[i / kWordBits] |= mask;
        else
            words_[i / kWordBits] &= ~mask;
    }

    void flip(std::size_t i) noexcept { words_[i / kWordBits] ^= Word{1} << (i % kWordBits); }

    bool is_zero() const noexcept
    {
        return std::all_of(words_.begin(), words_.end(), [](Word w) { return w == 0; });
    }

    /// First set coordinate at or after `from`; dim() if there is none.
    std::size_t next_set(std::size_t from) const noexcept
    {
        if (from >= dim_)
            return dim_;
        std::size_t w = from / kWordBits;
        Word bits = words_[w] & (~Word{0} << (from % kWordBits));
        while (true) {
            if (bits != 0)
                return w * kWordBits + static_cast<std::size_t>(std::countr_zero(bits));
            if (++w == words_.size())
                return dim_;
            bits = words_[w];
        }
    }

    /// Pivot coordinate (lowest set bit); dim() for the zero vector.
    std::size_t leading() const noexcept { return next_set(0); }

    std::size_t count() const noexcept
    {
        std::size_t c = 0;
        for (Word w : words_)
            c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    VecF2& operator^=(const VecF2& other)
    {
        if (other.dim_ != dim_)
            throw DimensionMismatch("VecF2: adding vectors of different length");
        for (std::size_t i = 0; i < words_.size(); ++i)
            words_[i] ^= other.words_[i];
        return *this;
    }

    friend VecF2 operator^(VecF2 a, const VecF2& b) { return a ^= b; }
    friend VecF2 operator+(VecF2 a, const VecF2& b) { return a ^= b; }

    friend bool operator==(const VecF2&, const VecF2&) = default;

    bool dot(const VecF2& other) const
    {
        if (other.dim_ != dim_)
            throw DimensionMismatch("VecF2::dot: length mismatch");
        Word acc = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            acc ^= words_[i] & other.words_[i];
        return (std::popcount(acc) & 1) != 0;
    }

    std::vector<std::size_t> support() const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = next_set(0); i < dim_; i = next_set(i + 1))
            out.push_back(i);
        return out;
    }

    std::string to_string() const
    {
        std::string s(dim_, '0');
        for (std::size_t i = next_set(0); i < dim_; i = next_set(i + 1))
            s[i] = '1';
        return s;
    }

    /// [this | other]
    VecF2 concat(const VecF2& other) const
    {
        VecF2 out(dim_ + other.dim_);
        for (std::size_t i = next_set(0); i < dim_; i = next_set(i + 1))
            out.set(i);
        for (std::size_t i = other.next_set(0); i < other.dim_; i = other.next_set(i + 1))
            out.set(dim_ + i);
        return out;
    }

    VecF2 slice(std::size_t begin, std::size_t length) const
    {
        if (begin + length > dim_)
            throw DimensionMismatch("VecF2::slice out of range");
        VecF2 out(length);
        for (std::size_t i = next_set(begin); i < begin + length; i = next_set(i + 1))
            out.set(i - begin);
        return out;
    }

private:
    std::size_t dim_ = 0;
    std::vector<Word> words_;
};

class MatF2 {
public:
    MatF2() = default;
    MatF2(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows, VecF2(cols)) {}

    static MatF2 identity(std::size_t n)
    {
        MatF2 m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m.set(i, i);
        return m;
    }

    /// Rows given as bit strings, e.g. {"110", "011"}.
    static MatF2 from_rows(std::initializer_list<std::string_view> rows)
    {
        std::vector<VecF2> vs;
        for (auto r : rows)
            vs.push_back(VecF2::from_string(r));
        const std::size_t cols = vs.empty() ? 0 : vs.front().dim();
        return from_row_vectors(cols, std::move(vs));
    }

    static MatF2 from_row_vectors(std::size_t cols, std::vector<VecF2> rows)
    {
        MatF2 m;
        m.rows_ = rows.size();
        m.cols_ = cols;
        for (const auto& r : rows)
            if (r.dim() != cols)
                throw DimensionMismatch("MatF2: ragged rows");
        m.data_ = std::move(rows);
        return m;
    }

    /// Matrix whose j-th column is columns[j].
    static MatF2 from_columns(std::size_t rows, std::span<const VecF2> columns)
    {
        MatF2 m(rows, columns.size());
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (columns[j].dim() != rows)
                throw DimensionMismatch("MatF2::from_columns: column length");
            for (std::size_t i : columns[j].support())
                m.set(i, j);
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    bool get(std::size_t i, std::size_t j) const noexcept { return data_[i][j]; }
    void set(std::size_t i, std::size_t j, bool value = true) noexcept { data_[i].set(j, value); }
    void flip(std::size_t i, std::size_t j) noexcept { data_[i].flip(j); }

    const VecF2& row(std::size_t i) const noexcept { return data_[i]; }
    const std::vector<VecF2>& row_vectors() const noexcept { return data_; }

    VecF2 column(std::size_t j) const
    {
        VecF2 c(rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            if (data_[i][j])
                c.set(i);
        return c;
    }

    VecF2 operator*(const VecF2& v) const
    {
        if (v.dim() != cols_)
            throw DimensionMismatch("MatF2 * VecF2: dimension mismatch");
        VecF2 out(rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            if (data_[i].dot(v))
                out.set(i);
        return out;
    }

    friend MatF2 operator*(const MatF2& a, const MatF2& b)
    {
        if (a.cols_ != b.rows_)
            throw DimensionMismatch("MatF2 * MatF2: inner dimension mismatch");
        MatF2 out(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            const VecF2& ai = a.data_[i];
            for (std::size_t k = ai.next_set(0); k < a.cols_; k = ai.next_set(k + 1))
                out.data_[i] ^= b.data_[k];
        }
        return out;
    }

    friend MatF2 operator+(MatF2 a, const MatF2& b)
    {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
            throw DimensionMismatch("MatF2 + MatF2: shape mismatch");
        for (std::size_t i = 0; i < a.rows_; ++i)
            a.data_[i] ^= b.data_[i];
        return a;
    }

    MatF2 transpose() const
    {
        MatF2 t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = data_[i].next_set(0); j < cols_; j = data_[i].next_set(j + 1))
                t.set(j, i);
        return t;
    }

    bool is_zero() const
    {
        return std::all_of(data_.begin(), data_.end(), [](const VecF2& r) { return r.is_zero(); });
    }

    friend bool operator==(const MatF2&, const MatF2&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<VecF2> data_;
};

namespace detail {

/// Incrementally built echelon basis with O(1) pivot lookup. Rows are not kept
/// fully reduced; call rref() for the canonical form.
class EchelonBasis {
public:
    explicit EchelonBasis(std::size_t dim) : dim_(dim), pivot_row_(dim, -1) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return rows_.size(); }

    void reduce(VecF2& v) const
    {
        for (std::size_t pos = v.next_set(0); pos < dim_; pos = v.next_set(pos + 1)) {
            const auto r = pivot_row_[pos];
            if (r >= 0)
                v ^= rows_[static_cast<std::size_t>(r)];
        }
    }

    /// Returns false if v was already in the span.
    bool insert(VecF2 v)
    {
        if (v.dim() != dim_)
            throw DimensionMismatch("EchelonBasis::insert: length mismatch");
        reduce(v);
        const std::size_t p = v.leading();
        if (p == dim_)
            return false;
        pivot_row_[p] = static_cast<std::int32_t>(rows_.size());
        rows_.push_back(std::move(v));
        return true;
    }

    /// Reduced row echelon form, rows sorted by pivot.
    std::vector<VecF2> rref() const
    {
        std::vector<VecF2> rows = rows_;
        std::sort(rows.begin(), rows.end(), [](const VecF2& a, const VecF2& b) { return a.leading() < b.leading(); });
        for (std::size_t j = 0; j < rows.size(); ++j) {
            const std::size_t p = rows[j].leading();
            for (std::size_t i = 0; i < j; ++i)
                if (rows[i][p])
                    rows[i] ^= rows[j];
        }
        return rows;
    }

private:
    std::size_t dim_;
    std::vector<VecF2> rows_;
    std::vector<std::int32_t> pivot_row_;
};

} // namespace detail

class Subspace {
public:
    Subspace() = default;
    /// The zero subspace of F2^ambient_dim.
    explicit Subspace(std::size_t ambient_dim) : ambient_(ambient_dim) {}

    static Subspace span(std::size_t ambient_dim, std::span<const VecF2> vectors)
    {
        detail::EchelonBasis e(ambient_dim);
        for (const auto& v : vectors)
            e.insert(v);
        return from_rref(ambient_dim, e.rref());
    }

    static Subspace full(std::size_t ambient_dim)
    {
        std::vector<VecF2> basis;
        basis.reserve(ambient_dim);
        for (std::size_t i = 0; i < ambient_dim; ++i)
            basis.push_back(VecF2::unit(ambient_dim, i));
        return from_rref(ambient_dim, std::move(basis));
    }

    /// span{e_i : i in indices}
    static Subspace coordinate(std::size_t ambient_dim, std::span<const std::size_t> indices)
    {
        std::vector<std::size_t> sorted(indices.begin(), indices.end());
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        std::vector<VecF2> basis;
        for (std::size_t i : sorted) {
            if (i >= ambient_dim)
                throw DimensionMismatch("Subspace::coordinate: index out of range");
            basis.push_back(VecF2::unit(ambient_dim, i));
        }
        return from_rref(ambient_dim, std::move(basis));
    }

    std::size_t ambient_dim() const noexcept { return ambient_; }
    std::size_t dim() const noexcept { return basis_.size(); }
    bool is_zero() const noexcept { return basis_.empty(); }
    const std::vector<VecF2>& basis() const noexcept { return basis_; }
    const std::vector<std::size_t>& pivot_cols() const noexcept { return pivots_; }

    /// Reduces v against the basis; v ends up zero iff it was in the subspace.
    void reduce(VecF2& v) const
    {
        if (v.dim() != ambient_)
            throw DimensionMismatch("Subspace: vector of wrong length");
        // Pivots are sorted and each basis row vanishes on the other pivots,
        // so one pass over the pivot list suffices.
        for (std::size_t k = 0; k < pivots_.size(); ++k)
            if (v[pivots_[k]])
                v ^= basis_[k];
    }

    bool contains(const VecF2& v) const
    {
        VecF2 w = v;
        reduce(w);
        return w.is_zero();
    }

    bool contains(const Subspace& other) const
    {
        if (other.ambient_ != ambient_)
            throw DimensionMismatch("Subspace::contains: ambient mismatch");
        return std::all_of(other.basis_.begin(), other.basis_.end(), [this](const VecF2& v) { return contains(v); });
    }

    /// Basis vectors as matrix rows.
    MatF2 basis_matrix() const { return MatF2::from_row_vectors(ambient_, basis_); }

    friend bool operator==(const Subspace&, const Subspace&) = default;

private:
    static Subspace from_rref(std::size_t ambient_dim, std::vector<VecF2> rows)
    {
        Subspace s(ambient_dim);
        s.pivots_.reserve(rows.size());
        for (const auto& r : rows)
            s.pivots_.push_back(r.leading());
        s.basis_ = std::move(rows);
        return s;
    }

    std::size_t ambient_ = 0;
    std::vector<VecF2> basis_;
    std::vector<std::size_t> pivots_;
};

// ---------------------------------------------------------------------------
// Operations

inline std::size_t rank(const MatF2& m)
{
    detail::EchelonBasis e(m.cols());
    for (const auto& r : m.row_vectors())
        e.insert(r);
    return e.size();
}

/// {v : m v = 0}
inline Subspace kernel(const MatF2& m)
{
    const std::size_t n = m.cols();
    detail::EchelonBasis e(n);
    for (const auto& r : m.row_vectors())
        e.insert(r);
    const auto rows = e.rref();

    std::vector<bool> is_pivot(n, false);
    for (const auto& r : rows)
        is_pivot[r.leading()] = true;

    std::vector<VecF2> basis;
    basis.reserve(n - rows.size());
    for (std::size_t f = 0; f < n; ++f) {
        if (is_pivot[f])
            continue;
        VecF2 v = VecF2::unit(n, f);
        for (const auto& r : rows)
            if (r[f])
                v.set(r.leading());
        basis.push_back(std::move(v));
    }
    return Subspace::span(n, basis);
}

/// Column space of m.
inline Subspace image(const MatF2& m)
{
    const MatF2 t = m.transpose();
    return Subspace::span(m.rows(), t.row_vectors());
}

/// m(s) = span{m b : b in basis(s)}
inline Subspace apply(const MatF2& m, const Subspace& s)
{
    if (s.ambient_dim() != m.cols())
        throw DimensionMismatch("apply: subspace is not in the domain of the matrix");
    std::vector<VecF2> images;
    images.reserve(s.dim());
    for (const auto& b : s.basis())
        images.push_back(m * b);
    return Subspace::span(m.rows(), images);
}

inline Subspace sum(const Subspace& a, const Subspace& b)
{
    if (a.ambient_dim() != b.ambient_dim())
        throw DimensionMismatch("sum: ambient mismatch");
    detail::EchelonBasis e(a.ambient_dim());
    for (const auto& v : a.basis())
        e.insert(v);
    for (const auto& v : b.basis())
        e.insert(v);
    return Subspace::span(a.ambient_dim(), e.rref());
}

/// Zassenhaus: reduce rows [a | a] and [b | 0]; rows whose left half vanishes
/// carry a basis of the intersection in their right half.
inline Subspace intersect(const Subspace& a, const Subspace& b)
{
    const std::size_t n = a.ambient_dim();
    if (b.ambient_dim() != n)
        throw DimensionMismatch("intersect: ambient mismatch");
    detail::EchelonBasis e(2 * n);
    const VecF2 zero(n);
    for (const auto& v : a.basis())
        e.insert(v.concat(v));
    for (const auto& v : b.basis())
        e.insert(v.concat(zero));
    std::vector<VecF2> out;
    for (const auto& row : e.rref())
        if (row.leading() >= n)
            out.push_back(row.slice(n, n));
    return Subspace::span(n, out);
}

/// {u : u . w = 0 for all w in s}
inline Subspace annihilator(const Subspace& s) { return kernel(s.basis_matrix()); }

/// {v : m v in w}
inline Subspace preimage(const MatF2& m, const Subspace& w)
{
    if (w.ambient_dim() != m.rows())
        throw DimensionMismatch("preimage: target subspace has wrong ambient dimension");
    const MatF2 functionals = annihilator(w).basis_matrix();
    return kernel(functionals * m);
}

/// V/W with a fixed set of coset representatives. Coordinates of a class are
/// taken with respect to those representatives.
class QuotientSpace {
public:
    QuotientSpace() = default;

    QuotientSpace(Subspace whole, Subspace sub) : whole_(std::move(whole)), sub_(std::move(sub))
    {
        const std::size_t n = whole_.ambient_dim();
        if (sub_.ambient_dim() != n)
            throw DimensionMismatch("quotient: ambient mismatch");
        if (!whole_.contains(sub_))
            throw NotASubspace("quotient: denominator is not contained in numerator");

        const std::size_t k = whole_.dim() - sub_.dim();
        pivot_row_.assign(n, -1);
        for (const auto& b : sub_.basis())
            push_row(b, VecF2(k));
        for (const auto& b : whole_.basis()) {
            VecF2 r = b;
            VecF2 label(k);
            reduce(r, label);
            if (r.is_zero())
                continue;
            // The residual r is the representative itself, so its class is e_j.
            const std::size_t j = reps_.size();
            reps_.push_back(r);
            push_row(std::move(r), VecF2::unit(k, j));
        }
    }

    std::size_t dim() const noexcept { return reps_.size(); }
    std::size_t ambient_dim() const noexcept { return whole_.ambient_dim(); }
    const Subspace& whole() const noexcept { return whole_; }
    const Subspace& sub() const noexcept { return sub_; }
    const std::vector<VecF2>& representatives() const noexcept { return reps_; }

    /// Class of v in quotient coordinates; false if v is not in the numerator.
    bool try_project(const VecF2& v, VecF2& coords) const
    {
        if (v.dim() != ambient_dim())
            throw DimensionMismatch("QuotientSpace::project: vector of wrong length");
        VecF2 r = v;
        coords = VecF2(dim());
        reduce(r, coords);
        return r.is_zero();
    }

    VecF2 project(const VecF2& v) const
    {
        VecF2 coords;
        if (!try_project(v, coords))
            throw NotASubspace("QuotientSpace::project: vector outside the numerator subspace");
        return coords;
    }

    VecF2 lift(const VecF2& coords) const
    {
        if (coords.dim() != dim())
            throw DimensionMismatch("QuotientSpace::lift: coordinate length");
        VecF2 v(ambient_dim());
        for (std::size_t j : coords.support())
            v ^= reps_[j];
        return v;
    }

    /// Projection as a linear map from coordinates over whole().basis() to
    /// quotient coordinates.
    MatF2 projection() const
    {
        std::vector<VecF2> cols;
        cols.reserve(whole_.dim());
        for (const auto& b : whole_.basis())
            cols.push_back(project(b));
        return MatF2::from_columns(dim(), cols);
    }

private:
    void reduce(VecF2& v, VecF2& label) const
    {
        const std::size_t n = ambient_dim();
        for (std::size_t pos = v.next_set(0); pos < n; pos = v.next_set(pos + 1)) {
            const auto r = pivot_row_[pos];
            if (r >= 0) {
                v ^= rows_[static_cast<std::size_t>(r)];
                label ^= labels_[static_cast<std::size_t>(r)];
            }
        }
    }

    void push_row(VecF2 v, VecF2 label)
    {
        VecF2 scratch(label.dim());
        reduce(v, scratch);
        label ^= scratch;
        const std::size_t p = v.leading();
        pivot_row_[p] = static_cast<std::int32_t>(rows_.size());
        rows_.push_back(std::move(v));
        labels_.push_back(std::move(label));
    }

    Subspace whole_;
    Subspace sub_;
    std::vector<VecF2> reps_;
    std::vector<VecF2> rows_;
    std::vector<VecF2> labels_;
    std::vector<std::int32_t> pivot_row_;
};

inline QuotientSpace quotient(const Subspace& v, const Subspace& w) { return QuotientSpace(v, w); }

} // namespace hfk::f2
