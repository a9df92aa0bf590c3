#pragma once

// Command-line driver. `main` parses arguments, `run` executes a Config.
// Exit codes: 0 success, 1 analysis error, 2 usage error.

#include "loopsum/emit.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

namespace loopsum::cli {

inline constexpr int kOk = 0;
inline constexpr int kAnalysisError = 1;
inline constexpr int kUsageError = 2;

inline const std::vector<std::string> kStages{"cfg",          "pathexpr", "path-program", "counted", "recurrences",
                                              "rd",           "closed-forms", "summary"};

struct Config {
    std::string input;
    std::string entry; // PRED/AR, empty keeps the file's entry
    std::string emit = "summary";
    std::string format = "text";
    std::string star_order = "file";
    bool assume_nonneg = true;
    std::vector<std::string> assume; // "VAR>=0"
    unsigned max_degree = rec::kDefaultMaxDegree;
    int grid = 4;
    bool fresh_counters = false;
    bool check = false;
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string &what) : Error("usage", what) {}
};

/// 0 silent, 1 stage progress, 2 stage outputs as well. From LOOPSUM_LOG.
inline int log_level() {
    const char *v = std::getenv("LOOPSUM_LOG");
    if (!v || !*v) return 0;
    std::string s = v;
    if (s == "debug" || s == "2") return 2;
    if (s == "off" || s == "0") return 0;
    return 1;
}

inline std::string read_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void apply_entry(chc::Program &p, const std::string &spec) {
    static const std::regex re(R"(\s*([A-Za-z_][A-Za-z0-9_]*)\s*/\s*([0-9]+)\s*)");
    std::smatch m;
    if (!std::regex_match(spec, m, re)) throw UsageError("--entry expects PRED/ARITY, got '" + spec + "'");
    std::string pred = m[1];
    std::size_t ar = std::stoul(m[2]);
    if (p.arity(pred) != ar) throw UsageError("no predicate " + pred + "/" + std::to_string(ar) + " in the program");
    p.entry = pred;
    p.entry_arity = ar;
}

inline sum::Options options(const Config &c) {
    sum::Options o;
    if (c.star_order == "file") o.star_order = rx::StarOrder::Ascending;
    else if (c.star_order == "reverse") o.star_order = rx::StarOrder::Reverse;
    else throw UsageError("--star-order expects file or reverse");
    o.assume_nonneg = c.assume_nonneg;
    static const std::regex re(R"(\s*([A-Za-z_][A-Za-z0-9_]*)\s*>=\s*0\s*)");
    for (auto &a : c.assume) {
        std::smatch m;
        if (!std::regex_match(a, m, re)) throw UsageError("--assume expects VAR>=0, got '" + a + "'");
        o.nonneg.insert(m[1]);
    }
    o.max_degree = c.max_degree;
    o.grid = c.grid;
    o.fresh_counters = c.fresh_counters;
    return o;
}

inline sum::Stage needed_stage(const std::string &emit) {
    if (emit == "cfg") return sum::Stage::Cfg;
    if (emit == "pathexpr") return sum::Stage::PathExpr;
    if (emit == "path-program") return sum::Stage::PathProgram;
    if (emit == "counted") return sum::Stage::Counted;
    return sum::Stage::Summary;
}

/// One stage of `s`, or nothing when the pipeline stopped before it.
inline std::optional<std::string> render(const std::string &stage, const sum::ProgramSummary &s, bool json,
                                         bool with_check) {
    using namespace emit;
    auto dump = [](const Json &j) { return j.dump(2) + "\n"; };
    if (stage == "cfg") return json ? dump(cfg_json(s.cfg)) : s.cfg.to_string();
    if (stage == "pathexpr") {
        if (!s.expr) return std::nullopt;
        return json ? dump(pathexpr_json(s)) : pathexpr_text(s);
    }
    if (stage == "path-program") {
        if (s.paths.root.empty()) return std::nullopt;
        return json ? dump(path_program_json(s.paths)) : s.paths.to_string();
    }
    if (stage == "counted") {
        if (s.counted.root.empty()) return std::nullopt;
        return json ? dump(counted_json(s.counted)) : s.counted.to_string();
    }
    if (s.counted.root.empty()) return std::nullopt;
    if (stage == "recurrences") return json ? dump(recurrences_json(s)) : recurrences_text(s);
    if (stage == "rd") return dump(rd_json(s));
    if (stage == "closed-forms") return json ? dump(closed_forms_json(s)) : closed_forms_text(s);
    if (stage == "summary") {
        if (s.output_order.empty() && !s.inputs.empty()) return std::nullopt;
        if (json) return dump(summary_json(s, with_check));
        std::string t = summary_text(s);
        if (with_check && s.check) t += "check:\n" + check_text(*s.check);
        return t;
    }
    return std::nullopt;
}

inline emit::Json render_all_json(const sum::ProgramSummary &s, bool with_check) {
    emit::Json j = emit::Json::object();
    for (auto &st : kStages)
        if (auto r = render(st, s, true, with_check)) j[st] = emit::Json::parse(*r);
    return j;
}

inline int run(const Config &c, std::ostream &out, std::ostream &err) {
    const int log = log_level();
    const bool json = c.format == "json";
    const bool all = c.emit == "all";
    sum::ProgramSummary s;
    auto print_all = [&] {
        if (json) {
            out << render_all_json(s, c.check).dump(2) << "\n";
            return;
        }
        for (auto &st : kStages)
            if (auto r = render(st, s, false, c.check)) out << "== " << st << " ==\n" << *r;
    };
    try {
        if (c.format != "text" && c.format != "json") throw UsageError("--format expects text or json");
        if (!all && std::find(kStages.begin(), kStages.end(), c.emit) == kStages.end())
            throw UsageError("unknown stage '" + c.emit + "'");
        sum::Options opt = options(c);
        if (!c.check && c.emit != "summary" && !all) opt.grid = -1;
        chc::Program p = chc::parse_program(read_file(c.input));
        if (!c.entry.empty()) apply_entry(p, c.entry);
        if (log) err << "loopsum: parsed " << p.clauses.size() << " clauses, entry " << p.entry << "/"
                     << p.entry_arity << "\n";
        sum::summarize_into(s, p, opt, all ? sum::Stage::Summary : needed_stage(c.emit));
        if (log) err << "loopsum: " << s.loops.size() << " loops summarized\n";
        if (log > 1)
            for (auto &l : s.loops) err << "loopsum:   " << l.to_string() << "\n";
    } catch (const UsageError &e) {
        err << "loopsum: " << e.what() << "\n";
        return kUsageError;
    } catch (const Error &e) {
        if (all) print_all();
        err << "loopsum: error [" << e.stage() << "]: " << e.what() << "\n";
        return kAnalysisError;
    }
    if (all) {
        print_all();
    } else {
        if (auto r = render(c.emit, s, json, c.check)) out << *r;
        if (c.check && c.emit != "summary" && s.check) {
            if (json) out << emit::check_json(*s.check).dump(2) << "\n";
            else out << emit::check_text(*s.check);
        }
    }
    return kOk;
}

inline void configure(CLI::App &app, Config &c) {
    app.description("Loop summarization for linear constrained Horn clauses.");
    app.add_option("input", c.input, "CHC program file")->required();
    app.add_option("--entry", c.entry, "entry predicate as PRED/ARITY");
    std::vector<std::string> emits = kStages;
    emits.push_back("all");
    app.add_option("--emit", c.emit, "pipeline stage to print")->check(CLI::IsMember(emits))->capture_default_str();
    app.add_option("--format", c.format, "text or json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
    app.add_option("--star-order", c.star_order, "multi-path star order: file or reverse")
        ->check(CLI::IsMember({"file", "reverse"}))
        ->capture_default_str();
    app.add_option("--assume-nonneg", c.assume_nonneg, "assume every input is >= 0")->capture_default_str();
    app.add_option("--assume", c.assume, "extra sign assumption VAR>=0 (repeatable)");
    app.add_option("--max-degree", c.max_degree, "closed-form degree cap")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--grid", c.grid, "audit grid radius, negative disables")->capture_default_str();
    app.add_flag("--fresh-counters", c.fresh_counters, "treat carried counters as non-constant");
    app.add_flag("--check", c.check, "print the simulation audit table");
}

inline int main(int argc, const char *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
    CLI::App app{"loopsum", "loopsum"};
    Config c;
    configure(app, c);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError &e) {
        err << "loopsum: " << e.what() << "\n" << "run with --help for usage\n";
        return kUsageError;
    }
    std::ifstream probe(c.input);
    if (!probe) {
        err << "loopsum: cannot read " << c.input << "\n";
        return kUsageError;
    }
    return run(c, out, err);
}

} // namespace loopsum::cli
