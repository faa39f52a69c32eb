// hfkgrid: knot Floer homology of grid diagrams from the command line.
//
//   hfkgrid compute <grid> [--out FILE] [--no-cache] [--cap N] [--jobs N]
//   hfkgrid obstruct <from> [<to>] [--mode invertible|concordance|doubly-slice] [--out FILE]
//   hfkgrid pages <grid> [--max-page R]
//   hfkgrid batch <dir> [--jobs N] [--out DIR] [--no-cache]
//   hfkgrid poly <grid>
//   hfkgrid table <grid>     HFK from the levels a >= 0 and symmetry; no tau
//
// Exit codes: 0 ok / not obstructed, 1 batch with failures, 2 unreadable or
// malformed input, 3 grid larger than --cap, 4 internal error, 10 obstructed.

#include "hfkgrid/complex.hpp"
#include "hfkgrid/grid.hpp"
#include "hfkgrid/invariants.hpp"
#include "hfkgrid/io.hpp"
#include "hfkgrid/obstruct.hpp"
#include "hfkgrid/spectral.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

constexpr int kExitObstructed = 10;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string out;
    bool no_cache = false;
    int cap = hfk::kDefaultSizeCap;
    unsigned jobs = 1;
    std::string mode = "invertible";
    std::optional<int> max_page;
};

hfk::PipelineOptions pipeline_options(const Options& o) { return {o.cap, o.jobs}; }

int cmd_compute(const std::string& path, const Options& o)
{
    hfk::ResultCache cache;
    const auto g = hfk::load_grid(path);
    const auto k = hfk::compute_cached(g, o.no_cache ? nullptr : &cache, pipeline_options(o));
    const auto doc = hfk::to_document(k);
    if (!o.out.empty())
        hfk::write_file_atomic(o.out, doc);
    std::cout << doc;
    return 0;
}

int cmd_obstruct(const std::vector<std::string>& paths, const Options& o)
{
    hfk::ResultCache cache;
    const auto* c = o.no_cache ? nullptr : &cache;
    const auto opt = pipeline_options(o);
    hfk::ObstructionReport rep;
    if (o.mode == "doubly-slice") {
        if (paths.size() != 1)
            throw UsageError("doubly-slice mode takes exactly one knot");
        rep = hfk::doubly_slice_obstruction(hfk::load_invariants(paths[0], c, opt));
    }
    else {
        if (paths.size() != 2)
            throw UsageError(o.mode + " mode takes two knots: <from> <to>");
        const auto k0 = hfk::load_invariants(paths[0], c, opt);
        const auto k1 = hfk::load_invariants(paths[1], c, opt);
        rep = o.mode == "concordance" ? hfk::concordance_obstruction(k0, k1) : hfk::invertible_obstruction(k0, k1);
    }
    const auto doc = hfk::to_json(rep).dump(2) + "\n";
    if (!o.out.empty())
        hfk::write_file_atomic(o.out, doc);
    std::cout << doc;
    return rep.obstructed() ? kExitObstructed : 0;
}

int cmd_pages(const std::string& path, const Options& o)
{
    const auto g = hfk::load_grid(path);
    const auto complexes = hfk::build_grid_complexes(g, o.cap);
    // E^0 is read off the generators; later pages come from the complex with
    // the filtration-preserving arrows cancelled, whose E^1 is the same.
    const auto reduced = hfk::cancel_filtration_preserving(complexes.filtered);
    const auto pages = hfk::compute_pages(reduced.complex);
    const int stab = pages.stabilization_page();
    const int last = o.max_page ? *o.max_page : stab;
    for (int r = 0; r <= last; ++r) {
        const auto dims = r == 0 ? complexes.filtered.generator_counts()
                                 : (r <= pages.last_page() ? pages.page(r).dims() : pages.infinity().dims());
        for (const auto& [k, d] : dims)
            if (d > 0)
                std::cout << r << ' ' << k.a << ' ' << k.m << ' ' << d << '\n';
    }
    std::cout << "# stabilization_page " << stab << '\n';
    std::cout << "# tau " << hfk::tau(pages) << '\n';
    return 0;
}

int cmd_batch(const std::string& dir, const Options& o)
{
    hfk::ResultCache cache;
    const auto res = hfk::run_batch(dir, o.jobs, o.no_cache ? nullptr : &cache, {o.cap, 1});
    if (!o.out.empty())
        hfk::write_batch(res, o.out);
    std::cout << hfk::summary_tsv(res);
    for (const auto& e : res.entries)
        if (!e.result)
            std::cerr << "error: " << e.name << ": " << e.error << '\n';
    return res.all_ok() ? 0 : 1;
}

int cmd_poly(const std::string& path, const Options& o)
{
    std::cout << hfk::format_poly(hfk::euler_oracle(hfk::load_grid(path), o.cap)) << '\n';
    return 0;
}

int cmd_table(const std::string& path, const Options& o)
{
    const auto r = hfk::hfk_by_symmetry(hfk::load_grid(path), o.cap);
    for (const auto& [k, d] : r.hfk)
        std::cout << k.a << ' ' << k.m << ' ' << d << '\n';
    std::cout << "# genus " << r.genus << '\n';
    std::cout << "# fibred " << (r.fibred ? "yes" : "no") << '\n';
    std::cout << "# alexander " << hfk::format_poly(r.alexander) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Knot Floer homology of grid diagrams over F2"};
    app.require_subcommand(1);
    Options o;
    std::string input;
    std::vector<std::string> inputs;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--cap", o.cap, "Largest grid size accepted")->check(CLI::Range(2, 12));
        sub->add_flag("--no-cache", o.no_cache, "Ignore and do not update the result cache");
    };

    auto* compute = app.add_subcommand("compute", "Compute the invariant document of a grid");
    compute->add_option("grid", input, "Grid file")->required();
    compute->add_option("--out", o.out, "Also write the document here");
    compute->add_option("--jobs", o.jobs, "Threads for the homology computation")->check(CLI::PositiveNumber);
    add_common(compute);

    auto* obstruct = app.add_subcommand("obstruct", "Test concordance-order obstructions between knots");
    obstruct->add_option("knots", inputs, "Result documents or grid files: <from> <to>, or one knot")
        ->required()
        ->expected(1, 2);
    obstruct->add_option("--mode", o.mode, "invertible, concordance or doubly-slice")
        ->check(CLI::IsMember({"invertible", "concordance", "doubly-slice"}));
    obstruct->add_option("--out", o.out, "Also write the report here");
    add_common(obstruct);

    auto* pages = app.add_subcommand("pages", "Print spectral sequence pages as 'r p m dim'");
    pages->add_option("grid", input, "Grid file")->required();
    pages->add_option("--max-page", o.max_page, "Last page to print")->check(CLI::NonNegativeNumber);
    pages->add_option("--cap", o.cap, "Largest grid size accepted")->check(CLI::Range(2, 12));

    auto* batch = app.add_subcommand("batch", "Compute every .grd file in a directory");
    batch->add_option("dir", input, "Directory of grid files")->required();
    batch->add_option("--jobs", o.jobs, "Knots computed in parallel")->check(CLI::PositiveNumber);
    batch->add_option("--out", o.out, "Directory for <name>.json and summary.tsv");
    add_common(batch);

    auto* poly = app.add_subcommand("poly", "Alexander polynomial from the state sum");
    poly->add_option("grid", input, "Grid file")->required();
    poly->add_option("--cap", o.cap, "Largest grid size accepted")->check(CLI::Range(2, 12));

    auto* table = app.add_subcommand("table", "HFK table as 'a m dim' from the upper half and symmetry");
    table->add_option("grid", input, "Grid file")->required();
    table->add_option("--cap", o.cap, "Largest grid size accepted")->check(CLI::Range(2, 12));

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*compute)
            return cmd_compute(input, o);
        if (*obstruct)
            return cmd_obstruct(inputs, o);
        if (*pages)
            return cmd_pages(input, o);
        if (*batch)
            return cmd_batch(input, o);
        if (*poly)
            return cmd_poly(input, o);
        if (*table)
            return cmd_table(input, o);
    }
    catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e) {
        const int rc = hfk::exit_code_for(e);
        std::cerr << (rc == 4 ? "internal error: " : "error: ") << e.what() << '\n';
        return rc;
    }
    return 4;
}
