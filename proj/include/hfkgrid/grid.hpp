#pragma once

// Toroidal grid diagrams.
//
// Geometry used throughout: the torus is [0,n) x [0,n). Vertical grid lines
// sit at x = 0..n-1, horizontal ones at y = 0..n-1. A state is a permutation
// `perm` putting one point at (i, perm[i]) on each vertical line. Markings are
// listed row by row from the top of the picture, so the marking in row r and
// column c occupies the unit cell whose lower-left corner is (c, n-1-r).

#include "hfkgrid/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hfk {

using Permutation = std::vector<int>;

inline constexpr int kDefaultSizeCap = 10;

class GridDiagram {
public:
    GridDiagram() = default;

    /// x_cols[r] / o_cols[r]: column of the X / O in row r. Throws InvalidGrid.
    GridDiagram(std::vector<int> x_cols, std::vector<int> o_cols, std::string name = {})
        : x_cols_(std::move(x_cols)), o_cols_(std::move(o_cols)), name_(std::move(name))
    {
        validate();
    }

    int size() const noexcept { return static_cast<int>(x_cols_.size()); }
    const std::vector<int>& x_cols() const noexcept { return x_cols_; }
    const std::vector<int>& o_cols() const noexcept { return o_cols_; }
    const std::string& name() const noexcept { return name_; }
    void set_name(std::string name) { name_ = std::move(name); }

    /// Lower-left corner of the cell holding the marking of row r.
    std::pair<int, int> x_cell(int r) const noexcept { return {x_cols_[r], size() - 1 - r}; }
    std::pair<int, int> o_cell(int r) const noexcept { return {o_cols_[r], size() - 1 - r}; }

    /// Canonical text form: "n = <n>", "X: ...", "O: ...", newline terminated.
    std::string canonical_text() const
    {
        std::ostringstream out;
        out << "n = " << size() << "\nX:";
        for (int c : x_cols_)
            out << ' ' << c;
        out << "\nO:";
        for (int c : o_cols_)
            out << ' ' << c;
        out << '\n';
        return out.str();
    }

    friend bool operator==(const GridDiagram& a, const GridDiagram& b)
    {
        return a.x_cols_ == b.x_cols_ && a.o_cols_ == b.o_cols_;
    }

private:
    void validate() const
    {
        const auto n = x_cols_.size();
        if (n < 2)
            throw InvalidGrid("grid size must be at least 2");
        if (o_cols_.size() != n)
            throw InvalidGrid("X and O rows have different lengths");
        if (!is_permutation(x_cols_))
            throw InvalidGrid("X columns do not form a permutation");
        if (!is_permutation(o_cols_))
            throw InvalidGrid("O columns do not form a permutation");
        for (std::size_t r = 0; r < n; ++r)
            if (x_cols_[r] == o_cols_[r])
                throw InvalidGrid("X/O collision in row " + std::to_string(r));
    }

    static bool is_permutation(const std::vector<int>& v)
    {
        std::vector<bool> seen(v.size(), false);
        for (int c : v) {
            if (c < 0 || static_cast<std::size_t>(c) >= v.size() || seen[static_cast<std::size_t>(c)])
                return false;
            seen[static_cast<std::size_t>(c)] = true;
        }
        return true;
    }

    std::vector<int> x_cols_;
    std::vector<int> o_cols_;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::vector<int> parse_columns(std::string_view text, std::size_t line_no, std::size_t offset)
{
    std::vector<int> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == ' ' || text[i] == '\t' || text[i] == ',') {
            ++i;
            continue;
        }
        int value = 0;
        auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), value);
        if (ec != std::errc() || ptr == text.data() + i)
            throw ParseError(line_no, offset + i + 1, "expected a column index");
        i = static_cast<std::size_t>(ptr - text.data());
        out.push_back(value);
    }
    return out;
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

} // namespace detail

/// Parses the grid file format:
///
///     n = 5            (a bare "5" is accepted too)
///     X: 1 2 3 4 0
///     O: 4 0 1 2 3
///
/// '#' starts a comment, blank lines are ignored, columns are zero-based.
/// A " / " separator may stand in for line breaks ("2 / X: 1 0 / O: 0 1").
inline GridDiagram parse_grid(std::string_view text, std::string name = {})
{
    struct Line {
        std::size_t number;
        std::size_t indent;
        std::string_view body;
    };
    std::vector<Line> lines;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find('\n', start), text.size());
        ++line_no;
        std::string_view raw = text.substr(start, end - start);
        if (auto hash = raw.find('#'); hash != std::string_view::npos)
            raw = raw.substr(0, hash);
        // Inline " / " separators split one physical line into several records.
        std::size_t piece_start = 0;
        while (true) {
            const std::size_t slash = raw.find('/', piece_start);
            const std::string_view piece = raw.substr(piece_start, slash == std::string_view::npos ? raw.npos : slash - piece_start);
            const std::string_view body = detail::trim(piece);
            if (!body.empty())
                lines.push_back({line_no, piece_start + static_cast<std::size_t>(body.data() - piece.data()), body});
            if (slash == std::string_view::npos)
                break;
            piece_start = slash + 1;
        }
        if (end == text.size())
            break;
        start = end + 1;
    }

    if (lines.empty())
        throw ParseError(line_no, 0, "empty grid file");

    // Size line.
    const Line& size_line = lines[0];
    std::string_view size_text = size_line.body;
    std::size_t size_offset = size_line.indent;
    if (size_text.starts_with("n")) {
        const auto eq = size_text.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(size_line.number, size_offset + 1, "expected 'n = <size>'");
        const auto rest = detail::trim(size_text.substr(eq + 1));
        size_offset += static_cast<std::size_t>(rest.data() - size_text.data());
        size_text = rest;
    }
    int n = 0;
    {
        auto [ptr, ec] = std::from_chars(size_text.data(), size_text.data() + size_text.size(), n);
        if (ec != std::errc() || ptr != size_text.data() + size_text.size())
            throw ParseError(size_line.number, size_offset + 1, "expected an integer grid size");
    }
    if (n < 2)
        throw ParseError(size_line.number, size_offset + 1, "grid size must be at least 2");

    std::optional<std::vector<int>> xs;
    std::optional<std::vector<int>> os;
    std::size_t x_line = 0;
    std::size_t o_line = 0;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const Line& l = lines[k];
        const auto colon = l.body.find(':');
        if (colon == std::string_view::npos)
            throw ParseError(l.number, l.indent + 1, "expected 'X:' or 'O:'");
        const auto key = detail::trim(l.body.substr(0, colon));
        auto values = detail::parse_columns(l.body.substr(colon + 1), l.number, l.indent + colon + 1);
        if (static_cast<int>(values.size()) != n)
            throw ParseError(l.number, l.indent + colon + 2,
                             "expected " + std::to_string(n) + " columns, found " + std::to_string(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i)
            if (values[i] < 0 || values[i] >= n)
                throw ParseError(l.number, 0, "column " + std::to_string(values[i]) + " out of range in row " + std::to_string(i));
        if (key == "X" || key == "x") {
            if (xs)
                throw ParseError(l.number, l.indent + 1, "duplicate X line");
            xs = std::move(values);
            x_line = l.number;
        }
        else if (key == "O" || key == "o") {
            if (os)
                throw ParseError(l.number, l.indent + 1, "duplicate O line");
            os = std::move(values);
            o_line = l.number;
        }
        else {
            throw ParseError(l.number, l.indent + 1, "unknown record '" + std::string(key) + "'");
        }
    }
    if (!xs)
        throw ParseError(line_no, 0, "missing X line");
    if (!os)
        throw ParseError(line_no, 0, "missing O line");

    auto check_perm = [n](const std::vector<int>& v, std::size_t at, const char* what) {
        std::vector<int> first_row(static_cast<std::size_t>(n), -1);
        for (int r = 0; r < n; ++r) {
            auto& slot = first_row[static_cast<std::size_t>(v[static_cast<std::size_t>(r)])];
            if (slot >= 0)
                throw ParseError(at, 0,
                                 std::string(what) + " rows " + std::to_string(slot) + " and " + std::to_string(r) +
                                     " share column " + std::to_string(v[static_cast<std::size_t>(r)]) +
                                     " (not a permutation)");
            slot = r;
        }
    };
    check_perm(*xs, x_line, "X");
    check_perm(*os, o_line, "O");
    for (int r = 0; r < n; ++r)
        if ((*xs)[static_cast<std::size_t>(r)] == (*os)[static_cast<std::size_t>(r)])
            throw ParseError(std::max(x_line, o_line), 0, "X/O collision in row " + std::to_string(r));

    return GridDiagram(std::move(*xs), std::move(*os), std::move(name));
}

// ---------------------------------------------------------------------------
// Combinatorics

/// Cycles of r -> (row of the X in column o_cols[r]).
inline int component_count(const GridDiagram& g)
{
    const int n = g.size();
    std::vector<int> x_row(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r)
        x_row[static_cast<std::size_t>(g.x_cols()[static_cast<std::size_t>(r)])] = r;
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    int cycles = 0;
    for (int s = 0; s < n; ++s) {
        if (seen[static_cast<std::size_t>(s)])
            continue;
        ++cycles;
        for (int r = s; !seen[static_cast<std::size_t>(r)];
             r = x_row[static_cast<std::size_t>(g.o_cols()[static_cast<std::size_t>(r)])])
            seen[static_cast<std::size_t>(r)] = true;
    }
    return cycles;
}

inline void require_knot(const GridDiagram& g)
{
    if (const int c = component_count(g); c != 1)
        throw NotAKnot("grid diagram has " + std::to_string(c) + " components; only knots are supported");
}

namespace detail {

/// Doubled coordinates: state points at (2i, 2perm[i]), marking centres at odd
/// coordinates. Keeps every comparison integral.
struct Point2 {
    int x;
    int y;
};

inline std::vector<Point2> marking_points(const GridDiagram& g, bool use_x)
{
    std::vector<Point2> pts;
    pts.reserve(static_cast<std::size_t>(g.size()));
    for (int r = 0; r < g.size(); ++r) {
        const auto [c, h] = use_x ? g.x_cell(r) : g.o_cell(r);
        pts.push_back({2 * c + 1, 2 * h + 1});
    }
    return pts;
}

/// #{(a, b) : a strictly south-west of b}
inline long southwest_pairs(const std::vector<Point2>& a, const std::vector<Point2>& b)
{
    long count = 0;
    for (const auto& p : a)
        for (const auto& q : b)
            if (p.x < q.x && p.y < q.y)
                ++count;
    return count;
}

/// Grading against one set of markings with the symmetrised pairing
/// J(P,Q) = (I(P,Q) + I(Q,P)) / 2:  M = J(x,x) - 2 J(x,M) + J(M,M) + 1.
inline int maslov_against(const Permutation& x, const std::vector<Point2>& marks, long marks_self)
{
    std::vector<Point2> pts;
    pts.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        pts.push_back({2 * static_cast<int>(i), 2 * x[i]});
    const long self = southwest_pairs(pts, pts);
    const long cross = southwest_pairs(pts, marks) + southwest_pairs(marks, pts);
    return static_cast<int>(self - cross + marks_self + 1);
}

} // namespace detail

/// Precomputed marking data for repeated grading evaluations.
class GradingContext {
public:
    explicit GradingContext(const GridDiagram& g)
        : n_(g.size()),
          o_pts_(detail::marking_points(g, false)),
          x_pts_(detail::marking_points(g, true)),
          o_self_(detail::southwest_pairs(o_pts_, o_pts_)),
          x_self_(detail::southwest_pairs(x_pts_, x_pts_))
    {
    }

    int maslov(const Permutation& x) const { return detail::maslov_against(x, o_pts_, o_self_); }
    int maslov_x(const Permutation& x) const { return detail::maslov_against(x, x_pts_, x_self_); }

    /// A = (M_O - M_X)/2 - (n-1)/2
    int alexander(const Permutation& x) const
    {
        const int twice = maslov(x) - maslov_x(x) - (n_ - 1);
        if (twice % 2 != 0)
            throw NonIntegerAlexander("Alexander grading is not an integer (link diagram?)");
        return twice / 2;
    }

private:
    int n_;
    std::vector<detail::Point2> o_pts_;
    std::vector<detail::Point2> x_pts_;
    long o_self_;
    long x_self_;
};

inline int maslov(const GridDiagram& g, const Permutation& x) { return GradingContext(g).maslov(x); }
inline int alexander(const GridDiagram& g, const Permutation& x) { return GradingContext(g).alexander(x); }

struct GridState {
    Permutation perm;
    int maslov = 0;
    int alexander = 0;
};

/// Lazily walks all n! states in lexicographic order, optionally only those in
/// one Alexander grading.
class StateEnumerator {
public:
    explicit StateEnumerator(const GridDiagram& g, std::optional<int> alexander_filter = std::nullopt,
                             int size_cap = kDefaultSizeCap)
        : ctx_(g), filter_(alexander_filter)
    {
        if (g.size() > size_cap)
            throw CapExceeded("grid size " + std::to_string(g.size()) + " exceeds the cap of " + std::to_string(size_cap));
        perm_.resize(static_cast<std::size_t>(g.size()));
        std::iota(perm_.begin(), perm_.end(), 0);
    }

    /// Writes the next state into `out`; false once exhausted.
    bool next(GridState& out)
    {
        while (!done_) {
            out.perm = perm_;
            done_ = !std::next_permutation(perm_.begin(), perm_.end());
            out.alexander = ctx_.alexander(out.perm);
            if (filter_ && out.alexander != *filter_)
                continue;
            out.maslov = ctx_.maslov(out.perm);
            return true;
        }
        return false;
    }

private:
    GradingContext ctx_;
    std::optional<int> filter_;
    Permutation perm_;
    bool done_ = false;
};

inline std::vector<GridState> enumerate_states(const GridDiagram& g, std::optional<int> alexander_filter = std::nullopt,
                                               int size_cap = kDefaultSizeCap)
{
    StateEnumerator it(g, alexander_filter, size_cap);
    std::vector<GridState> out;
    GridState s;
    while (it.next(s))
        out.push_back(s);
    return out;
}

/// An embedded rectangle on the torus from a state x to the state obtained by
/// swapping the points on vertical lines `left` and `right` (right may wrap).
/// x occupies the lower-left and upper-right corners.
struct Rectangle {
    int left = 0;   // vertical line of the lower-left corner
    int bottom = 0; // horizontal line of the lower-left corner
    int width = 0;
    int height = 0;
    int x_count = 0;     // X markings in the interior
    int o_count = 0;     // O markings in the interior
    int point_count = 0; // points of x strictly inside

    int right() const noexcept { return left + width; }
    bool empty() const noexcept { return point_count == 0; }
};

namespace detail {

inline bool cyclic_between(int value, int start, int length, int n) noexcept
{
    const int off = ((value - start) % n + n) % n;
    return off < length;
}

inline bool cyclic_strictly_inside(int value, int start, int length, int n) noexcept
{
    const int off = ((value - start) % n + n) % n;
    return off > 0 && off < length;
}

/// Rectangle with lower-left corner at x's point on line a and upper-right at
/// x's point on line b.
inline Rectangle rectangle_between(const GridDiagram& g, const Permutation& x, int a, int b)
{
    const int n = g.size();
    Rectangle r;
    r.left = a;
    r.bottom = x[static_cast<std::size_t>(a)];
    r.width = ((b - a) % n + n) % n;
    r.height = ((x[static_cast<std::size_t>(b)] - x[static_cast<std::size_t>(a)]) % n + n) % n;
    for (int k = 0; k < n; ++k)
        if (cyclic_strictly_inside(k, r.left, r.width, n) &&
            cyclic_strictly_inside(x[static_cast<std::size_t>(k)], r.bottom, r.height, n))
            ++r.point_count;
    for (int row = 0; row < n; ++row) {
        const auto [xc, xh] = g.x_cell(row);
        if (cyclic_between(xc, r.left, r.width, n) && cyclic_between(xh, r.bottom, r.height, n))
            ++r.x_count;
        const auto [oc, oh] = g.o_cell(row);
        if (cyclic_between(oc, r.left, r.width, n) && cyclic_between(oh, r.bottom, r.height, n))
            ++r.o_count;
    }
    return r;
}

} // namespace detail

/// The two rectangles from x to y, or nothing if x and y do not differ by a
/// single transposition.
inline std::vector<Rectangle> rectangles(const GridDiagram& g, const Permutation& x, const Permutation& y)
{
    const int n = g.size();
    if (x.size() != static_cast<std::size_t>(n) || y.size() != x.size())
        throw DimensionMismatch("rectangles: state size does not match grid");
    std::vector<int> diff;
    for (int i = 0; i < n; ++i)
        if (x[static_cast<std::size_t>(i)] != y[static_cast<std::size_t>(i)])
            diff.push_back(i);
    if (diff.size() != 2)
        return {};
    const int a = diff[0];
    const int b = diff[1];
    if (x[static_cast<std::size_t>(a)] != y[static_cast<std::size_t>(b)] ||
        x[static_cast<std::size_t>(b)] != y[static_cast<std::size_t>(a)])
        return {};
    return {detail::rectangle_between(g, x, a, b), detail::rectangle_between(g, x, b, a)};
}

inline std::vector<Rectangle> rectangles(const GridDiagram& g, const GridState& x, const GridState& y)
{
    return rectangles(g, x.perm, y.perm);
}

/// Replaces the X in (row, col) by a 2x2 block: a new row is inserted below
/// `row` and a new column right of `col`; X's go to the north-east and
/// south-west cells of the block, the new O to the south-east, and the
/// north-west cell stays empty.
inline GridDiagram stabilize(const GridDiagram& g, int row, int col)
{
    const int n = g.size();
    if (row < 0 || row >= n || col < 0 || col >= n)
        throw InvalidGrid("stabilize: site (" + std::to_string(row) + ", " + std::to_string(col) + ") out of range");
    if (g.x_cols()[static_cast<std::size_t>(row)] != col)
        throw InvalidGrid("stabilize: no X marking at (" + std::to_string(row) + ", " + std::to_string(col) + ")");

    auto shift_col = [col](int c) { return c <= col ? c : c + 1; };
    std::vector<int> xs(static_cast<std::size_t>(n + 1));
    std::vector<int> os(static_cast<std::size_t>(n + 1));
    for (int r = 0; r < n; ++r) {
        const int nr = r <= row ? r : r + 1;
        xs[static_cast<std::size_t>(nr)] = shift_col(g.x_cols()[static_cast<std::size_t>(r)]);
        os[static_cast<std::size_t>(nr)] = shift_col(g.o_cols()[static_cast<std::size_t>(r)]);
    }
    xs[static_cast<std::size_t>(row)] = col + 1;
    xs[static_cast<std::size_t>(row + 1)] = col;
    os[static_cast<std::size_t>(row + 1)] = col + 1;
    return GridDiagram(std::move(xs), std::move(os), g.name());
}

/// Lexicographic rank of a permutation of {0..n-1}.
inline std::uint32_t permutation_rank(const Permutation& p)
{
    const std::size_t n = p.size();
    std::uint64_t rank = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t smaller = 0;
        for (std::size_t j = i + 1; j < n; ++j)
            if (p[j] < p[i])
                ++smaller;
        rank = rank * (n - i) + smaller;
    }
    return static_cast<std::uint32_t>(rank);
}

inline std::uint64_t factorial(int n)
{
    std::uint64_t f = 1;
    for (int k = 2; k <= n; ++k)
        f *= static_cast<std::uint64_t>(k);
    return f;
}

} // namespace hfk
