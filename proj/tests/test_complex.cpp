#include "hfkgrid/complex.hpp"
#include "hfkgrid/grid.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

using namespace hfk;
using namespace testing_support;

namespace {

const char* kUnknot = "2 / X: 1 0 / O: 0 1";
const char* kTrefoil = "5 / X: 1 2 3 4 0 / O: 4 0 1 2 3";
const char* kFigureEight = "n = 6\nX: 1 0 2 3 5 4\nO: 5 3 4 1 2 0\n";

std::map<Bigrading, std::size_t> dilute_by_hand(std::map<Bigrading, std::size_t> t, int n)
{
    for (int k = 0; k < n - 1; ++k) {
        std::map<Bigrading, std::size_t> next;
        for (const auto& [b, d] : t) {
            next[b] += d;
            next[{b.a - 1, b.m - 1}] += d;
        }
        t = next;
    }
    return t;
}

/// The filtered boundary rebuilt from rectangles(): x -> y counts empty
/// rectangles without O's, mod 2.
std::vector<Column> boundary_from_rectangles(const GridDiagram& g, bool forbid_x)
{
    const int n = g.size();
    Permutation p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    std::vector<Permutation> states;
    do
        states.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    std::vector<Column> cols(states.size());
    for (std::size_t j = 0; j < states.size(); ++j) {
        for (std::size_t i = 0; i < states.size(); ++i) {
            int count = 0;
            for (const auto& r : rectangles(g, states[j], states[i]))
                if (r.point_count == 0 && r.o_count == 0 && (!forbid_x || r.x_count == 0))
                    ++count;
            if (count % 2)
                cols[j].push_back(static_cast<std::uint32_t>(i));
        }
    }
    return cols;
}

std::size_t dense_homology_total(const FilteredComplexF2& c)
{
    const auto d = c.dense_boundary();
    return c.size() - 2 * naive_rank(to_bool_rows(d));
}

} // namespace

TEST(TildeComplex, UnknotHasZeroDifferential)
{
    const auto t = build_tilde_complex(parse_grid(kUnknot));
    EXPECT_EQ(t.blocks.size(), 2u);
    EXPECT_EQ(t.block_size({0, 0}), 1u);
    EXPECT_EQ(t.block_size({-1, -1}), 1u);
    EXPECT_TRUE(t.differentials.empty());
    EXPECT_EQ(homology_dims(t), (std::map<Bigrading, std::size_t>{{{-1, -1}, 1}, {{0, 0}, 1}}));
}

TEST(TildeComplex, TrefoilHomologyIsDilutedHfk)
{
    const auto t = build_tilde_complex(parse_grid(kTrefoil));
    const auto h = homology_dims(t);
    std::size_t total = 0;
    for (const auto& [k, d] : h)
        total += d;
    EXPECT_EQ(total, 48u);
    const auto expected = dilute_by_hand({{{1, 0}, 1}, {{0, -1}, 1}, {{-1, -2}, 1}}, 5);
    EXPECT_EQ(h, expected);
}

TEST(TildeComplex, BlockwiseAndThreadedRanksAgreeWithWholeMatrix)
{
    for (const char* text : {kTrefoil, kFigureEight}) {
        const auto g = parse_grid(text);
        const auto data = detail::grid_chain_data(g, 10);
        const auto t = bigraded_from_columns(data.alexander, data.maslov, data.tilde_columns);
        std::size_t total = 0;
        for (const auto& [k, d] : homology_dims(t, 1))
            total += d;
        EXPECT_EQ(homology_dims(t, 1), homology_dims(t, 4));
        // Whole-matrix homology of the tilde complex.
        std::vector<FilteredGenerator> gens;
        for (std::size_t i = 0; i < data.alexander.size(); ++i)
            gens.push_back({data.alexander[i], data.maslov[i]});
        const FilteredComplexF2 whole(gens, data.tilde_columns);
        EXPECT_EQ(dense_homology_total(whole), total);
    }
}

TEST(GridComplexes, BoundaryMatchesRectangleEnumeration)
{
    for (const char* text : {kUnknot, kTrefoil}) {
        const auto g = parse_grid(text);
        const auto data = detail::grid_chain_data(g, 10);
        EXPECT_EQ(data.filtered_columns, boundary_from_rectangles(g, false));
        EXPECT_EQ(data.tilde_columns, boundary_from_rectangles(g, true));
    }
}

TEST(FilteredComplex, AssociatedGradedIsTildeComplex)
{
    for (const char* text : {kUnknot, kTrefoil, kFigureEight}) {
        const auto g = parse_grid(text);
        const auto both = build_grid_complexes(g);
        const auto gr = associated_graded(both.filtered);
        EXPECT_EQ(gr.blocks, both.tilde.blocks);
        EXPECT_EQ(gr.differentials, both.tilde.differentials);

        // d = (filtration-preserving part) + (strictly dropping part)
        const auto drop = strictly_dropping_part(both.filtered);
        const auto data = detail::grid_chain_data(g, 10);
        for (std::size_t j = 0; j < drop.size(); ++j)
            EXPECT_EQ(detail::xor_sorted(drop[j], data.tilde_columns[j]), both.filtered.boundary_of(j));
    }
}

TEST(FilteredComplex, TotalHomologyIsDilutedSphere)
{
    EXPECT_EQ(total_homology(build_filtered_complex(parse_grid(kUnknot))),
              (std::map<int, std::size_t>{{-1, 1}, {0, 1}}));
    for (const char* text : {kTrefoil, kFigureEight}) {
        const auto g = parse_grid(text);
        const auto c = build_filtered_complex(g);
        const auto h = total_homology(c);
        std::size_t total = 0;
        for (const auto& [m, d] : h)
            total += d;
        EXPECT_EQ(total, std::size_t{1} << (g.size() - 1));
        EXPECT_EQ(h.at(0), 1u);
        EXPECT_EQ(h.rbegin()->first, 0);
        EXPECT_EQ(dense_homology_total(c), total);
    }
}

TEST(FilteredComplex, ValidatesInput)
{
    // Maslov grading not lowered by one.
    EXPECT_THROW(FilteredComplexF2({{0, 0}, {0, 0}}, {{}, {0}}), InvariantViolation);
    // Filtration raised.
    EXPECT_THROW(FilteredComplexF2({{0, -1}, {-1, 0}}, {{}, {0}}), InvariantViolation);
    // d^2 != 0.
    EXPECT_THROW(FilteredComplexF2({{0, 0}, {0, 1}, {0, 2}}, {{}, {0}, {1}}), InvariantViolation);
    EXPECT_THROW(FilteredComplexF2({{0, 0}}, {{}, {}}), DimensionMismatch);
    // Duplicate entries cancel mod 2.
    const FilteredComplexF2 c({{0, 0}, {0, 1}}, {{}, {0, 0}});
    EXPECT_TRUE(c.boundary_of(1).empty());
    const FilteredComplexF2 single({{3, 0}}, {{}});
    EXPECT_EQ(total_homology(single), (std::map<int, std::size_t>{{0, 1}}));
}

TEST(FilteredComplex, CapIsEnforced)
{
    EXPECT_THROW(build_filtered_complex(parse_grid(kTrefoil), 4), CapExceeded);
    EXPECT_THROW(build_tilde_complex(parse_grid("4 / X: 1 0 3 2 / O: 0 1 2 3")), NotAKnot);
}

TEST(Cancellation, ReducedComplexHasOneGeneratorPerE1Class)
{
    for (const char* text : {kUnknot, kTrefoil, kFigureEight}) {
        const auto both = build_grid_complexes(parse_grid(text));
        const auto r = cancel_filtration_preserving(both.filtered);
        const auto tilde = homology_dims(both.tilde);
        EXPECT_EQ(r.complex.generator_counts(), tilde);
        for (std::size_t j = 0; j < r.complex.size(); ++j)
            for (auto i : r.complex.boundary_of(j))
                EXPECT_LT(r.complex.generator(i).filtration, r.complex.generator(j).filtration);
        EXPECT_EQ(total_homology(r.complex), total_homology(both.filtered));
        for (std::size_t k = 0; k < r.original_index.size(); ++k)
            EXPECT_EQ(r.complex.generator(k), both.filtered.generator(r.original_index[k]));
    }
}

TEST(Cancellation, RandomComplexesKeepHomologyPerFiltrationLevel)
{
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const auto k = random_known_complex(rng, 16, 4);
        const auto c = k.complex();
        const auto r = cancel_filtration_preserving(c);
        EXPECT_EQ(r.complex.generator_counts(), k.page_dims(1));
        EXPECT_EQ(total_homology(r.complex), total_homology(c));
    }
}

TEST(TildeComplex, TruncatedLevelsMatchFullHomology)
{
    for (const char* text : {kUnknot, kTrefoil, kFigureEight}) {
        const auto g = parse_grid(text);
        const auto full = homology_dims(build_tilde_complex(g));
        for (int a_min : {-3, -1, 0, 1, 2}) {
            std::map<Bigrading, std::size_t> expected;
            for (const auto& [k, d] : full)
                if (k.a >= a_min && d > 0)
                    expected[k] = d;
            EXPECT_EQ(tilde_homology_above(g, a_min), expected) << text << " a >= " << a_min;
            const auto c = build_tilde_complex_above(g, a_min);
            for (std::size_t i = 0; i < c.size(); ++i)
                EXPECT_GE(c.generator(i).filtration, a_min);
        }
    }
}
