#include "hfkgrid/invariants.hpp"
#include "hfkgrid/io.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <random>

using namespace hfk;
using namespace testing_support;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

/// Runs the CLI with stderr discarded unless asked for.
RunResult run_cli(const std::string& args, bool merge_stderr = false)
{
    const std::string cmd = std::string(HFKGRID_CLI_PATH) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
    RunResult r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p)
        return r;
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = fread(buf.data(), 1, buf.size(), p)) > 0)
        r.out.append(buf.data(), got);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("hfkgrid-test-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    fs::path path_;
};

/// Every test runs with a private cache directory.
class CliTest : public ::testing::Test {
protected:
    void SetUp() override { setenv("HFKGRID_CACHE_DIR", cache_.str().c_str(), 1); }
    void TearDown() override { unsetenv("HFKGRID_CACHE_DIR"); }

    TempDir cache_;
    TempDir work_;
};

std::string knot_path(const std::string& stem) { return data_path("knots/" + stem + ".grd"); }

std::map<std::string, std::string> directory_contents(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir))
        out[e.path().filename().string()] = read_file(e.path());
    return out;
}

} // namespace

TEST_F(CliTest, CacheRoundTripIsByteIdentical)
{
    const ResultCache cache(cache_.path());
    const auto g = load_grid(knot_path("trefoil_n5"));
    const auto first = to_document(compute_cached(g, &cache));
    ASSERT_TRUE(fs::exists(cache.entry_path(grid_hash(g))));
    EXPECT_EQ(read_file(cache.entry_path(grid_hash(g))), first);
    const auto second = to_document(compute_cached(g, &cache));
    EXPECT_EQ(first, second);
    EXPECT_EQ(to_document(compute_cached(g, nullptr)), first);
}

TEST_F(CliTest, StaleOrCorruptCacheEntriesAreRecomputed)
{
    const ResultCache cache(cache_.path());
    const auto g = load_grid(knot_path("figure_eight_n6"));
    const auto fresh = compute_all(g);
    const auto entry = cache.entry_path(grid_hash(g));

    auto stale = to_json(fresh);
    stale["schema_version"] = kSchemaVersion - 1;
    stale["tau"] = 99;
    write_file_atomic(entry, stale.dump(2));
    EXPECT_FALSE(cache.get(grid_hash(g)));
    EXPECT_EQ(compute_cached(g, &cache), fresh);
    EXPECT_EQ(read_file(entry), to_document(fresh));

    write_file_atomic(entry, "{ not json");
    EXPECT_EQ(compute_cached(g, &cache), fresh);
}

TEST_F(CliTest, CacheHitKeepsTheRequestedName)
{
    const ResultCache cache(cache_.path());
    const auto g = load_grid(knot_path("trefoil_n5"));
    compute_cached(g, &cache);
    const auto renamed = parse_grid(g.canonical_text(), "other_name");
    EXPECT_EQ(compute_cached(renamed, &cache).name, "other_name");
    EXPECT_THROW(compute_cached(g, &cache, {4, 1}), CapExceeded);
}

TEST_F(CliTest, BatchIsIndependentOfJobCount)
{
    const ResultCache cache(cache_.path());
    const auto one = run_batch(data_path("knots"), 1, nullptr);
    const auto four = run_batch(data_path("knots"), 4, &cache);
    EXPECT_EQ(summary_tsv(one), summary_tsv(four));
    ASSERT_EQ(one.entries.size(), 6u);
    EXPECT_TRUE(one.all_ok());
    EXPECT_EQ(one.entries.front().name, "figure_eight_n6");

    const fs::path a = work_.path() / "a";
    const fs::path b = work_.path() / "b";
    write_batch(one, a);
    write_batch(four, b);
    EXPECT_EQ(directory_contents(a), directory_contents(b));
    EXPECT_EQ(directory_contents(a).size(), 7u);
}

TEST_F(CliTest, BatchCollectsErrors)
{
    const fs::path dir = work_.path() / "mixed";
    fs::create_directories(dir);
    fs::copy_file(knot_path("unknot_n2"), dir / "good.grd");
    write_file_atomic(dir / "bad.grd", "n = 3\nX: 0 1 2\nO: 0 2 1\n");
    write_file_atomic(dir / "notes.txt", "ignored");
    const auto r = run_batch(dir, 2, nullptr);
    ASSERT_EQ(r.entries.size(), 2u);
    EXPECT_FALSE(r.all_ok());
    EXPECT_EQ(r.entries[0].name, "bad");
    EXPECT_EQ(r.entries[0].error_kind, 2);
    EXPECT_TRUE(r.entries[1].result);
    write_batch(r, work_.path() / "out");
    EXPECT_TRUE(fs::exists(work_.path() / "out" / "errors.tsv"));
    EXPECT_EQ(read_file(work_.path() / "out" / "summary.tsv").find("bad"), std::string::npos);

    EXPECT_TRUE(run_batch(work_.path() / "out", 1, nullptr).entries.empty());
    EXPECT_THROW(run_batch(work_.path() / "missing", 1, nullptr), InputError);
}

TEST_F(CliTest, ComputeWritesDocument)
{
    const auto out = (work_.path() / "t.json").string();
    const auto r = run_cli("compute " + knot_path("trefoil_n5") + " --out " + out);
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, read_file(out));
    const auto k = invariants_from_json(nlohmann::json::parse(r.out));
    EXPECT_EQ(k.name, "trefoil_n5");
    EXPECT_EQ(k.tau, 1);
    EXPECT_EQ(k.alexander_poly(), (LaurentPoly{{-1, 1}, {0, -1}, {1, 1}}));
    // Second run is served from the cache and is byte-identical.
    EXPECT_EQ(run_cli("compute " + knot_path("trefoil_n5")).out, r.out);
    EXPECT_EQ(run_cli("compute --no-cache " + knot_path("trefoil_n5")).out, r.out);

    const auto u = run_cli("compute " + knot_path("unknot_n2"));
    EXPECT_EQ(u.code, 0);
    EXPECT_EQ(invariants_from_json(nlohmann::json::parse(u.out)).table(), (HfkTable{{{0, 0}, 1}}));
}

TEST_F(CliTest, ExitCodes)
{
    const auto bad = work_.path() / "bad.grd";
    write_file_atomic(bad, "n = 3\nX: 0 1 2\nO: 0 1\n");
    const auto r = run_cli("compute " + bad.string(), true);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("line 3"), std::string::npos) << r.out;

    EXPECT_EQ(run_cli("compute " + (work_.path() / "missing.grd").string()).code, 2);
    EXPECT_EQ(run_cli("compute --cap 6 " + knot_path("torus_3_4_n8")).code, 3);
    EXPECT_EQ(run_cli("compute").code, 2);
    EXPECT_EQ(run_cli("frobnicate").code, 2);
    EXPECT_EQ(run_cli("--help").code, 0);

    const auto link = work_.path() / "link.grd";
    write_file_atomic(link, "4 / X: 1 0 3 2 / O: 0 1 2 3");
    EXPECT_EQ(run_cli("compute " + link.string()).code, 2);
}

TEST_F(CliTest, ObstructExitCodes)
{
    const auto r = run_cli("obstruct " + knot_path("unknot_n2") + " " + knot_path("trefoil_n5"));
    EXPECT_EQ(r.code, 10);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j.at("verdict"), "obstructed");
    EXPECT_EQ(j.at("witnesses")[0].at("location"), "(i=0, j=0)");

    // Documents and grids mix freely.
    const auto doc = (work_.path() / "trefoil.json").string();
    ASSERT_EQ(run_cli("compute " + knot_path("trefoil_n5") + " --out " + doc).code, 0);
    EXPECT_EQ(run_cli("obstruct " + doc + " " + knot_path("trefoil_n6")).code, 0);
    EXPECT_EQ(run_cli("obstruct --mode doubly-slice " + doc).code, 10);
    EXPECT_EQ(run_cli("obstruct --mode doubly-slice " + knot_path("figure_eight_n6")).code, 0);
    EXPECT_EQ(run_cli("obstruct --mode concordance " + knot_path("unknot_n2") + " " + knot_path("figure_eight_n6")).code,
              0);
    EXPECT_EQ(run_cli("obstruct --mode doubly-slice " + doc + " " + doc).code, 2);
    EXPECT_EQ(run_cli("obstruct " + doc).code, 2);

    auto stale = nlohmann::json::parse(read_file(doc));
    stale["schema_version"] = 0;
    const auto stale_path = (work_.path() / "stale.json").string();
    write_file_atomic(stale_path, stale.dump());
    EXPECT_EQ(run_cli("obstruct " + stale_path + " " + doc).code, 2);
    write_file_atomic(stale_path, "{ broken");
    EXPECT_EQ(run_cli("obstruct " + stale_path + " " + doc).code, 2);

    const auto out = (work_.path() / "rep.json").string();
    const auto again = run_cli("obstruct --out " + out + " " + knot_path("unknot_n2") + " " + knot_path("trefoil_n5"));
    EXPECT_EQ(again.out, r.out);
    EXPECT_EQ(read_file(out), r.out);
}

TEST_F(CliTest, Pages)
{
    const auto u = run_cli("pages " + knot_path("unknot_n2"));
    EXPECT_EQ(u.code, 0);
    EXPECT_EQ(u.out, "0 -1 -1 1\n0 0 0 1\n1 -1 -1 1\n1 0 0 1\n# stabilization_page 1\n# tau 0\n");

    const auto t = run_cli("pages " + knot_path("trefoil_n5"));
    EXPECT_EQ(t.code, 0);
    EXPECT_NE(t.out.find("# stabilization_page 2\n"), std::string::npos);
    EXPECT_NE(t.out.find("# tau 1\n"), std::string::npos);

    // Page 0 is the generator count per (p, m).
    const auto e0 = run_cli("pages --max-page 0 " + knot_path("trefoil_n5"));
    const auto counts = build_filtered_complex(load_grid(knot_path("trefoil_n5"))).generator_counts();
    std::string expected;
    for (const auto& [k, d] : counts)
        expected += "0 " + std::to_string(k.a) + " " + std::to_string(k.m) + " " + std::to_string(d) + "\n";
    EXPECT_EQ(e0.out.substr(0, expected.size()), expected);
    EXPECT_EQ(e0.out.find("\n1 "), std::string::npos);
}

TEST_F(CliTest, BatchCommand)
{
    const auto out1 = work_.path() / "j1";
    const auto out4 = work_.path() / "j4";
    const auto r1 = run_cli("batch --no-cache --jobs 1 --out " + out1.string() + " " + data_path("knots"));
    const auto r4 = run_cli("batch --jobs 4 --out " + out4.string() + " " + data_path("knots"));
    EXPECT_EQ(r1.code, 0);
    EXPECT_EQ(r1.out, r4.out);
    EXPECT_EQ(directory_contents(out1), directory_contents(out4));
    EXPECT_EQ(std::count(r1.out.begin(), r1.out.end(), '\n'), 7);
    EXPECT_NE(r1.out.find("torus_3_4_n8\t8\t3\t3\ttrue\tt^3 - t^2 + 1 - t^-2 + t^-3\t5\n"), std::string::npos);

    const auto empty = work_.path() / "empty";
    fs::create_directories(empty);
    const auto e = run_cli("batch " + empty.string());
    EXPECT_EQ(e.code, 0);
    EXPECT_EQ(e.out, "name\tn\tgenus\ttau\tfibred\talexander\ttotal_hfk_dim\n");

    const auto mixed = work_.path() / "mixed";
    fs::create_directories(mixed);
    fs::copy_file(knot_path("unknot_n2"), mixed / "unknot_n2.grd");
    write_file_atomic(mixed / "broken.grd", "garbage");
    const auto m = run_cli("batch " + mixed.string(), true);
    EXPECT_EQ(m.code, 1);
    EXPECT_NE(m.out.find("error: broken"), std::string::npos);
    EXPECT_NE(m.out.find("unknot_n2\t2\t0\t0\ttrue\t1\t1"), std::string::npos);
}

TEST_F(CliTest, Poly)
{
    const auto r = run_cli("poly " + knot_path("figure_eight_n6"));
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "-t + 3 - t^-1\n");
    EXPECT_EQ(run_cli("poly " + knot_path("torus_3_4_n8")).out, "t^3 - t^2 + 1 - t^-2 + t^-3\n");
}

TEST_F(CliTest, TableFromUpperHalf)
{
    const auto r = run_cli("table " + knot_path("trefoil_n5"));
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "-1 -2 1\n0 -1 1\n1 0 1\n# genus 1\n# fibred yes\n# alexander t - 1 + t^-1\n");
    EXPECT_EQ(run_cli("table --cap 7 " + knot_path("torus_3_4_n8")).code, 3);
}
