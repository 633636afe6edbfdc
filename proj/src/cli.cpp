// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridprune/cli.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <chrono>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "gridprune/diagnostics.hpp"
#include "gridprune/error.hpp"
#include "gridprune/pipeline.hpp"
#include "gridprune/scoring.hpp"
#include "gridprune/selection_io.hpp"
#include "gridprune/synth.hpp"
#include "gridprune/token_field.hpp"
#include "gridprune/worker_pool.hpp"
#include "gridprune/zonal.hpp"
#include "json.hpp"

namespace gridprune::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct PruneFlags {
    std::string input;
    int keep = 0;
    int block_size = 2;
    double alpha = 0.8;
    std::string preset;
    std::string out;
    std::string gather;
};

struct AllocateFlags {
    std::string zone_rel;
    std::string capacities;
    int keep = 0;
    std::string out;
};

struct FlopsFlags {
    long long tokens = 0;
    long long layers = 0;
    long long hidden = 0;
    long long ffn = 0;
};

struct BiasFlags {
    std::string selections;
    int tokens = 0;
    std::string out;
    std::string tsv;
    int grid_h = 0;
    int grid_w = 0;
    int block_size = 0;
};

struct SynthFlags {
    std::string pattern;
    int count = 1;
    std::uint64_t seed = 0;
    std::string out;
    int grid_h = 24;
    int grid_w = 24;
    int embed_dim = 64;
    int heads = 4;
    double strength = 4.0;
    std::vector<std::string> rects;
};

struct CompareFlags {
    std::string methods;
    std::string corpus;
    int keep = 0;
    int block_size = 2;
    double alpha = 0.8;
    std::string preset;
    std::string out;
    std::string json_out;
};

PruneConfig resolve_prune_config(int keep, int block_size, double alpha, bool alpha_given, const std::string& preset) {
    PruneConfig cfg;
    cfg.k = keep;
    cfg.block_size = block_size;
    if (!preset.empty()) {
        cfg.preset = preset;
        cfg.alpha = find_preset(preset).alpha;
    }
    if (alpha_given) {
        cfg.alpha = alpha;
    } else if (preset.empty()) {
        fail(ErrorCode::InvalidConfig, "--alpha or --preset is required");
    }
    cfg.validate();
    return cfg;
}

json config_json(const PruneConfig& cfg) {
    json j{{"keep", cfg.k}, {"block_size", cfg.block_size}, {"alpha", cfg.alpha}};
    if (cfg.preset) j["preset"] = *cfg.preset;
    return j;
}

void print_resolved(std::ostream& err, const std::string& command, json config) {
    config["command"] = command;
    err << "resolved config: " << config.dump() << "\n";
}

void warn_zero_norm(std::ostream& err, const std::vector<int>& rows, const std::string& where) {
    if (rows.empty()) return;
    err << "warning: " << where << ": " << rows.size() << " zero-norm embedding row(s) scored 0 (first index "
        << rows.front() << ")\n";
}

std::vector<double> read_number_list(const std::string& path) {
    const std::string text = read_text_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        try {
            return json::parse(text).get<std::vector<double>>();
        } catch (const json::exception& e) {
            fail(ErrorCode::InvalidConfig, path + ": " + e.what());
        }
    }
    std::vector<double> values;
    std::istringstream in(text);
    in.imbue(std::locale::classic());
    std::string token;
    while (in >> token) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != token.size()) {
            fail(ErrorCode::InvalidConfig, path + ": '" + token + "' is not a number");
        }
        values.push_back(v);
    }
    return values;
}

Rect parse_rect(const std::string& text) {
    Rect r;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream in(text);
    in.imbue(std::locale::classic());
    if (!(in >> r.row >> c1 >> r.col >> c2 >> r.height >> c3 >> r.width) || c1 != ',' || c2 != ',' || c3 != ',' ||
        !in.eof()) {
        fail(ErrorCode::InvalidRect, "--rect expects row,col,height,width, got '" + text + "'");
    }
    return r;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
    } else {
        write_text_file(path, text);
    }
}

void write_gather(const std::string& path, const std::vector<float>& rows) {
    if (!path.empty()) write_f32_blob(path, rows);
}

int cmd_prune(const PruneFlags& f, bool alpha_given, std::ostream& out, std::ostream& err) {
    const PruneConfig cfg = resolve_prune_config(f.keep, f.block_size, f.alpha, alpha_given, f.preset);
    json resolved = config_json(cfg);
    resolved["input"] = f.input;
    resolved["out"] = f.out;
    print_resolved(err, "prune", resolved);

    const TokenField field = load_field(f.input);
    if (cfg.k > field.num_tokens()) {
        fail(ErrorCode::BudgetExceedsCapacity, "keep exceeds token count (" + std::to_string(cfg.k) + " > " +
                                                   std::to_string(field.num_tokens()) + ")");
    }
    std::vector<int> zero_rows;
    const auto start = std::chrono::steady_clock::now();
    const Selection sel = grid_prune(field, cfg, &zero_rows);
    const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
    warn_zero_norm(err, zero_rows, f.input);
    write_output(f.out, dump_json(selection_to_json(sel)), out);
    write_gather(f.gather, gather_embeddings(field, sel.kept_indices));
    err << "selection time: " << format_fixed(elapsed.count(), 3) << " ms\n";
    return kExitOk;
}

int cmd_prune_hr(const PruneFlags& f, bool alpha_given, std::ostream& out, std::ostream& err) {
    const PruneConfig cfg = resolve_prune_config(f.keep, f.block_size, f.alpha, alpha_given, f.preset);
    json resolved = config_json(cfg);
    resolved["input"] = f.input;
    resolved["out"] = f.out;
    print_resolved(err, "prune-hr", resolved);

    const HighResInput input = load_high_res(f.input);
    for (const auto& sub : input.sub_images) {
        if (cfg.k > sub.num_tokens()) {
            fail(ErrorCode::BudgetExceedsCapacity, "keep exceeds token count of a sub-image");
        }
    }
    const HighResResult result = prune_high_res(input, cfg, default_worker_count());
    write_output(f.out, dump_json(high_res_to_json(input, result)), out);
    write_gather(f.gather, gather_high_res(input, result));
    return kExitOk;
}

int cmd_allocate(const AllocateFlags& f, std::ostream& out, std::ostream& err) {
    print_resolved(err, "allocate",
                   json{{"zone_rel", f.zone_rel}, {"capacities", f.capacities}, {"keep", f.keep}, {"out", f.out}});
    const auto zone_rel = read_number_list(f.zone_rel);
    const auto caps_raw = read_number_list(f.capacities);
    std::vector<int> caps;
    for (double c : caps_raw) {
        if (c < 0 || c != static_cast<double>(static_cast<int>(c))) {
            fail(ErrorCode::InvalidConfig, f.capacities + ": capacities must be non-negative integers");
        }
        caps.push_back(static_cast<int>(c));
    }
    const BudgetAllocation alloc = allocate(zone_rel, caps, f.keep);
    const json doc{{"k", alloc.k}, {"probs", alloc.probs}, {"float_budgets", alloc.float_budgets},
                   {"budgets", alloc.budgets}};
    write_output(f.out, dump_json(doc), out);
    return kExitOk;
}

int cmd_flops(const FlopsFlags& f, std::ostream& out, std::ostream& err) {
    print_resolved(err, "flops",
                   json{{"tokens", f.tokens}, {"layers", f.layers}, {"hidden", f.hidden}, {"ffn", f.ffn}});
    out << format_fixed(flops(f.tokens, FlopsModel{f.layers, f.hidden, f.ffn}), 2) << "\n";
    return kExitOk;
}

int cmd_bias(const BiasFlags& f, std::ostream& out, std::ostream& err) {
    json resolved{{"selections", f.selections}, {"tokens", f.tokens}, {"out", f.out}};
    if (f.block_size > 0) resolved["zones"] = {f.grid_h, f.grid_w, f.block_size};
    print_resolved(err, "bias", resolved);

    std::optional<ZoneMap> zmap;
    if (f.block_size > 0) {
        if (f.grid_h * f.grid_w != f.tokens) {
            fail(ErrorCode::MixedN, "--grid-h x --grid-w does not equal --tokens");
        }
        zmap.emplace(f.grid_h, f.grid_w, f.block_size);
    }
    const auto files = expand_glob(f.selections);
    if (files.empty()) {
        fail(ErrorCode::IoFailure, "no selection files match '" + f.selections + "'");
    }
    const auto selections =
        parallel_map<Selection>(files.size(), default_worker_count(), [&](std::size_t i) { return read_selection(files[i]); });
    const BiasReport report = bias_report(selections, f.tokens, zmap ? &*zmap : nullptr);
    json doc = report.to_json();
    doc["files"] = json::array();
    for (const auto& p : files) doc["files"].push_back(p.generic_string());
    write_output(f.out, dump_json(doc), out);
    if (!f.tsv.empty()) write_text_file(f.tsv, report.histogram_tsv());
    return kExitOk;
}

int cmd_synth(const SynthFlags& f, std::ostream& out, std::ostream& err) {
    SceneSpec spec;
    spec.pattern = parse_pattern(f.pattern);
    spec.grid_h = f.grid_h;
    spec.grid_w = f.grid_w;
    spec.embed_dim = f.embed_dim;
    spec.num_heads = f.heads;
    spec.signal_strength = f.strength;
    spec.seed = f.seed;
    for (const auto& r : f.rects) spec.planted_zone_rects.push_back(parse_rect(r));
    print_resolved(err, "synth",
                   json{{"pattern", f.pattern}, {"count", f.count}, {"seed", f.seed}, {"out", f.out},
                        {"grid_h", f.grid_h}, {"grid_w", f.grid_w}, {"embed_dim", f.embed_dim},
                        {"heads", f.heads}, {"strength", f.strength}, {"rects", f.rects}});
    // Fail on a bad spec before touching the output directory.
    (void)generate(spec);
    write_corpus(spec, f.count, f.out, default_worker_count());
    out << "wrote " << f.count << " scene(s) to " << f.out << "\n";
    return kExitOk;
}

int cmd_compare(const CompareFlags& f, bool alpha_given, std::ostream& out, std::ostream& err) {
    const PruneConfig cfg = resolve_prune_config(f.keep, f.block_size, f.alpha, alpha_given, f.preset);
    json resolved = config_json(cfg);
    resolved["methods"] = f.methods;
    resolved["corpus"] = f.corpus;
    print_resolved(err, "compare", resolved);

    std::vector<NamedMethod> methods;
    for (const auto& name : split_list(f.methods)) methods.push_back(builtin_method(name));
    if (methods.empty()) {
        fail(ErrorCode::InvalidConfig, "--methods lists no method");
    }

    std::vector<fs::path> dirs;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(f.corpus, ec)) {
        if (entry.is_directory() && fs::exists(entry.path() / kManifestFileName)) dirs.push_back(entry.path());
    }
    if (ec) {
        fail(ErrorCode::IoFailure, "cannot read corpus " + f.corpus + ": " + ec.message());
    }
    std::sort(dirs.begin(), dirs.end());
    const int workers = default_worker_count();
    const auto corpus = parallel_map<CorpusItem>(dirs.size(), workers, [&](std::size_t i) {
        return CorpusItem{dirs[i].filename().string(), load_field(dirs[i]), read_planted(dirs[i])};
    });
    for (const auto& item : corpus) {
        if (cfg.k > item.field.num_tokens()) {
            fail(ErrorCode::BudgetExceedsCapacity, "keep exceeds token count in " + item.name);
        }
    }
    const ComparisonTable table = compare(methods, corpus, cfg, workers);
    write_output(f.out, table.to_markdown(), out);
    if (!f.json_out.empty()) write_text_file(f.json_out, dump_json(table.to_json()));
    return kExitOk;
}

void add_prune_options(CLI::App* sub, PruneFlags& f, CLI::Option*& alpha_opt) {
    sub->add_option("--input", f.input, "Field directory")->required();
    sub->add_option("--keep", f.keep, "Tokens kept per field")->required();
    sub->add_option("--block-size", f.block_size, "Zone side length")->capture_default_str();
    alpha_opt = sub->add_option("--alpha", f.alpha, "Fusion weight in [0, 1]");
    sub->add_option("--preset", f.preset, "Named alpha preset, e.g. llava15-11");
    sub->add_option("--out", f.out, "Output JSON file ('-' for stdout)")->required();
    sub->add_option("--gather", f.gather, "Write gathered embedding rows as an f32 blob");
}

}  // namespace

std::vector<fs::path> expand_glob(const std::string& pattern) {
    std::vector<fs::path> out;
    const fs::path p(pattern);
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
        for (const auto& entry : fs::directory_iterator(p, ec)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path());
        }
    } else if (pattern.find_first_of("*?[") == std::string::npos) {
        if (fs::exists(p, ec)) out.push_back(p);
    } else {
        const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
        const std::string leaf = p.filename().string();
        for (const auto& entry : fs::directory_iterator(dir, ec)) {
            if (entry.is_regular_file() && ::fnmatch(leaf.c_str(), entry.path().filename().c_str(), 0) == 0) {
                out.push_back(p.has_parent_path() ? entry.path() : entry.path().filename());
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Text-guided zonal visual-token pruning", "gridprune"};
    app.set_config("--config", "", "TOML/INI overlay; command-line flags take precedence");
    app.allow_config_extras(false);
    app.require_subcommand(1);

    PruneFlags prune_flags;
    CLI::Option* prune_alpha = nullptr;
    auto* prune = app.add_subcommand("prune", "Prune one field directory");
    add_prune_options(prune, prune_flags, prune_alpha);

    PruneFlags hr_flags;
    CLI::Option* hr_alpha = nullptr;
    auto* prune_hr = app.add_subcommand("prune-hr", "Prune every sub-image of a high-resolution input");
    add_prune_options(prune_hr, hr_flags, hr_alpha);

    AllocateFlags alloc_flags;
    auto* alloc = app.add_subcommand("allocate", "Softmax budgeting plus capped rounding");
    alloc->add_option("--zone-rel", alloc_flags.zone_rel, "Zone relevance list (JSON array or whitespace)")->required();
    alloc->add_option("--capacities", alloc_flags.capacities, "Zone capacity list")->required();
    alloc->add_option("--keep", alloc_flags.keep, "Total tokens kept")->required();
    alloc->add_option("--out", alloc_flags.out, "Output JSON file (default stdout)");

    FlopsFlags flops_flags;
    auto* flops_cmd = app.add_subcommand("flops", "Decoder TFLOPs for N visual tokens");
    flops_cmd->add_option("--tokens", flops_flags.tokens, "Visual tokens N")->required();
    flops_cmd->add_option("--layers", flops_flags.layers, "Decoder layers L")->required();
    flops_cmd->add_option("--hidden", flops_flags.hidden, "Hidden dimension d")->required();
    flops_cmd->add_option("--ffn", flops_flags.ffn, "FFN intermediate dimension m")->required();

    BiasFlags bias_flags;
    auto* bias = app.add_subcommand("bias", "Positional-bias report over selection files");
    bias->add_option("--selections", bias_flags.selections, "Glob or directory of selection JSON")->required();
    bias->add_option("--tokens", bias_flags.tokens, "Token count N of every selection")->required();
    bias->add_option("--out", bias_flags.out, "Output JSON file (default stdout)");
    bias->add_option("--tsv", bias_flags.tsv, "Histogram TSV file");
    bias->add_option("--grid-h", bias_flags.grid_h, "Grid rows for zone entropy");
    bias->add_option("--grid-w", bias_flags.grid_w, "Grid columns for zone entropy");
    bias->add_option("--block-size", bias_flags.block_size, "Zone side for entropy (0: raster bins)");

    SynthFlags synth_flags;
    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic corpus");
    synth->add_option("--pattern", synth_flags.pattern, "sink_tail|centered_object|multi_object|uniform_noise")
        ->required();
    synth->add_option("--count", synth_flags.count, "Scenes to write")->capture_default_str();
    synth->add_option("--seed", synth_flags.seed, "Corpus seed")->required();
    synth->add_option("--out", synth_flags.out, "Output directory")->required();
    synth->add_option("--grid-h", synth_flags.grid_h)->capture_default_str();
    synth->add_option("--grid-w", synth_flags.grid_w)->capture_default_str();
    synth->add_option("--embed-dim", synth_flags.embed_dim)->capture_default_str();
    synth->add_option("--heads", synth_flags.heads)->capture_default_str();
    synth->add_option("--strength", synth_flags.strength, "Planted signal strength")->capture_default_str();
    synth->add_option("--rect", synth_flags.rects, "Planted rectangle row,col,height,width (repeatable)");

    CompareFlags cmp_flags;
    auto* cmp = app.add_subcommand("compare", "Compare selection methods over a corpus");
    cmp->add_option("--methods", cmp_flags.methods, "Comma-separated method names")->required();
    cmp->add_option("--corpus", cmp_flags.corpus, "Directory of field directories")->required();
    cmp->add_option("--keep", cmp_flags.keep, "Tokens kept per field")->required();
    cmp->add_option("--block-size", cmp_flags.block_size)->capture_default_str();
    auto* cmp_alpha = cmp->add_option("--alpha", cmp_flags.alpha);
    cmp->add_option("--preset", cmp_flags.preset);
    cmp->add_option("--out", cmp_flags.out, "Markdown output (default stdout)");
    cmp->add_option("--json", cmp_flags.json_out, "JSON output file");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (*prune) return cmd_prune(prune_flags, prune_alpha->count() > 0, out, err);
        if (*prune_hr) return cmd_prune_hr(hr_flags, hr_alpha->count() > 0, out, err);
        if (*alloc) return cmd_allocate(alloc_flags, out, err);
        if (*flops_cmd) return cmd_flops(flops_flags, out, err);
        if (*bias) return cmd_bias(bias_flags, out, err);
        if (*synth) return cmd_synth(synth_flags, out, err);
        if (*cmp) return cmd_compare(cmp_flags, cmp_alpha->count() > 0, out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return is_io_error(e.code()) ? kExitIo : kExitValidation;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitValidation;
}

}  // namespace gridprune::cli
