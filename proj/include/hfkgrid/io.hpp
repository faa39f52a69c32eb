#pragma once

// Grid files, result documents, the on-disk result cache and batch runs.

#include "hfkgrid/errors.hpp"
#include "hfkgrid/grid.hpp"
#include "hfkgrid/invariants.hpp"
#include "hfkgrid/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace hfk {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes via a temporary file and a rename so readers never see a partial file.
inline void write_file_atomic(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + tmp.string());
        out << content;
        if (!out)
            throw Error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

/// The knot is named after the file stem.
inline GridDiagram load_grid(const fs::path& path) { return parse_grid(read_file(path), path.stem().string()); }

inline bool looks_like_document(const std::string& text)
{
    const auto pos = text.find_first_not_of(" \t\r\n");
    return pos != std::string::npos && text[pos] == '{';
}

class ResultCache {
public:
    /// HFKGRID_CACHE_DIR, else $XDG_CACHE_HOME/hfkgrid, else ~/.cache/hfkgrid.
    static fs::path default_directory()
    {
        if (const char* d = std::getenv("HFKGRID_CACHE_DIR"); d && *d)
            return d;
        if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x)
            return fs::path(x) / "hfkgrid";
        if (const char* h = std::getenv("HOME"); h && *h)
            return fs::path(h) / ".cache" / "hfkgrid";
        return fs::temp_directory_path() / "hfkgrid-cache";
    }

    ResultCache() : dir_(default_directory()) {}
    explicit ResultCache(fs::path dir) : dir_(std::move(dir)) {}

    const fs::path& directory() const noexcept { return dir_; }
    fs::path entry_path(const std::string& hash) const { return dir_ / (hash + ".json"); }

    /// Cached invariants for a grid hash; nullopt on a miss, an unreadable
    /// entry or a stale schema version.
    std::optional<KnotInvariantSet> get(const std::string& hash) const
    {
        const auto path = entry_path(hash);
        std::error_code ec;
        if (!fs::exists(path, ec))
            return std::nullopt;
        try {
            auto k = invariants_from_json(nlohmann::json::parse(read_file(path)));
            if (k.grid_hash != hash)
                return std::nullopt;
            return k;
        }
        catch (const std::exception&) {
            return std::nullopt;
        }
    }

    void put(const KnotInvariantSet& k) const { write_file_atomic(entry_path(k.grid_hash), to_document(k)); }

private:
    fs::path dir_;
};

/// compute_all through the cache. The cached document's name is replaced by
/// the diagram's name.
inline KnotInvariantSet compute_cached(const GridDiagram& g, const ResultCache* cache, const PipelineOptions& opt = {})
{
    if (g.size() > opt.size_cap)
        throw CapExceeded("grid size " + std::to_string(g.size()) + " exceeds the cap of " + std::to_string(opt.size_cap));
    if (cache) {
        if (auto hit = cache->get(grid_hash(g))) {
            hit->name = g.name();
            return *hit;
        }
    }
    auto k = compute_all(g, opt);
    if (cache)
        cache->put(k);
    return k;
}

/// A result document, or a grid file computed on the fly.
inline KnotInvariantSet load_invariants(const fs::path& path, const ResultCache* cache, const PipelineOptions& opt = {})
{
    const std::string text = read_file(path);
    if (looks_like_document(text)) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        }
        catch (const nlohmann::json::parse_error& e) {
            throw ParseError(1, 1, std::string("invalid result document: ") + e.what());
        }
        return invariants_from_json(j);
    }
    return compute_cached(parse_grid(text, path.stem().string()), cache, opt);
}

// ---------------------------------------------------------------------------
// Batch

struct BatchEntry {
    std::string name;
    std::optional<KnotInvariantSet> result;
    std::string error;
    int error_kind = 0; // exit code the single-file command would return
};

struct BatchResult {
    std::vector<BatchEntry> entries; // sorted by name

    bool all_ok() const
    {
        return std::all_of(entries.begin(), entries.end(), [](const BatchEntry& e) { return e.result.has_value(); });
    }
};

/// Exit code for an exception escaping a single-knot command.
inline int exit_code_for(const std::exception& e)
{
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const InvalidGrid*>(&e) ||
        dynamic_cast<const NotAKnot*>(&e) || dynamic_cast<const NonIntegerAlexander*>(&e) ||
        dynamic_cast<const SchemaMismatch*>(&e) || dynamic_cast<const InputError*>(&e))
        return 2;
    if (dynamic_cast<const CapExceeded*>(&e))
        return 3;
    return 4;
}

inline std::vector<fs::path> grid_files(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw InputError(dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".grd")
            files.push_back(e.path());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.stem().string() < b.stem().string(); });
    return files;
}

inline BatchResult run_batch(const fs::path& dir, unsigned jobs, const ResultCache* cache,
                             const PipelineOptions& opt = {})
{
    const auto files = grid_files(dir);
    BatchResult res;
    res.entries.resize(files.size());
    detail::parallel_for(files.size(), std::max(1U, jobs), [&](std::size_t i) {
        BatchEntry& e = res.entries[i];
        e.name = files[i].stem().string();
        try {
            e.result = compute_cached(load_grid(files[i]), cache, opt);
        }
        catch (const std::exception& ex) {
            e.error = ex.what();
            e.error_kind = exit_code_for(ex);
        }
    });
    return res;
}

inline std::string summary_tsv(const BatchResult& r)
{
    std::string out = "name\tn\tgenus\ttau\tfibred\talexander\ttotal_hfk_dim\n";
    for (const auto& e : r.entries) {
        if (!e.result)
            continue;
        const auto& k = *e.result;
        out += e.name + "\t" + std::to_string(k.n) + "\t" + std::to_string(k.genus) + "\t" + std::to_string(k.tau) +
               "\t" + (k.fibred ? "true" : "false") + "\t" + format_poly(k.alexander_poly()) + "\t" +
               std::to_string(k.total_dim()) + "\n";
    }
    return out;
}

inline std::string error_listing(const BatchResult& r)
{
    std::string out;
    for (const auto& e : r.entries)
        if (!e.result)
            out += e.name + "\t" + e.error + "\n";
    return out;
}

/// <out>/<name>.json per knot, summary.tsv, and errors.tsv when anything failed.
inline void write_batch(const BatchResult& r, const fs::path& out)
{
    fs::create_directories(out);
    for (const auto& e : r.entries)
        if (e.result)
            write_file_atomic(out / (e.name + ".json"), to_document(*e.result));
    write_file_atomic(out / "summary.tsv", summary_tsv(r));
    const auto errors = error_listing(r);
    if (!errors.empty())
        write_file_atomic(out / "errors.tsv", errors);
}

} // namespace hfk
