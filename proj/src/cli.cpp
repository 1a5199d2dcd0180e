#include "amerput/cli.hpp"

#include "amerput/arbitrage.hpp"
#include "amerput/conditions.hpp"
#include "amerput/construction.hpp"
#include "amerput/errors.hpp"
#include "amerput/io.hpp"
#include "amerput/verify.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>

namespace amerput {

namespace {

// %.17g keeps text output lossless like the JSON output
std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double env_tolerance() {
    if (const char* s = std::getenv("AMERPUT_TOLERANCE")) {
        char* end = nullptr;
        const double v = std::strtod(s, &end);
        if (end == s || *end != '\0' || !(v > 0.0))
            throw InputError("AMERPUT_TOLERANCE must be a positive number");
        return v;
    }
    return kDefaultTolerance;
}

Market load_market(const std::string& path, const RunConfig& cfg) {
    if (path.empty())
        throw InputError("--input is required for this command");
    Market m = market_from_json(read_json_file(path), env_tolerance());
    if (cfg.tolerance)
        m.tolerance = *cfg.tolerance;
    m.validate();
    return m;
}

void print_report_text(std::ostream& out, const ConditionReport& r) {
    out << (r.passed ? "passed" : "violations found") << '\n';
    for (const Violation& v : r.violations) {
        out << "  " << to_string(v.kind) << " at";
        for (double k : v.strikes)
            out << ' ' << num(k);
        out << " (magnitude " << num(v.magnitude) << ")\n";
    }
    for (const Violation& v : r.warnings) {
        out << "  warning " << to_string(v.kind) << " at";
        for (double k : v.strikes)
            out << ' ' << num(k);
        out << '\n';
    }
}

void print_strategy_text(std::ostream& out, const ArbitrageStrategy& s) {
    out << "strategy for " << to_string(s.kind) << ": credit " << num(s.initial_credit) << '\n';
    for (const Position& p : s.positions) {
        out << "  " << num(p.quantity) << " x " << to_string(p.instrument);
        if (p.instrument == Instrument::AmericanPut || p.instrument == Instrument::EuropeanPut)
            out << " K=" << num(p.strike);
        out << " exercise=" << to_string(p.rule) << '\n';
    }
    for (const PayoffCase& c : s.payoff_cases)
        out << "  case '" << c.region << "': min payoff " << num(payoff_minimum(c)) << " in " << c.variable << '\n';
}

void emit(std::ostream& out, const RunConfig& cfg, const Json& doc, const std::function<void()>& text) {
    if (cfg.format == Format::Json)
        out << doc.dump(2) << '\n';
    else
        text();
}

int cmd_check(const RunConfig& cfg, std::ostream& out) {
    const Market m = load_market(cfg.input, cfg);
    ConditionReport rep = analyze_market(m).report;
    const ConditionReport pairs = check_discrete_pairs(m);
    Json doc = {{"command", "check"}, {"report", to_json(rep)}, {"discrete_pairs", to_json(pairs)}};
    emit(out, cfg, doc, [&] {
        print_report_text(out, rep);
        out << "discrete pairs: " << (pairs.passed ? "passed" : "violated") << '\n';
    });
    return rep.passed ? exit_code::ok : exit_code::violations;
}

int cmd_arbitrage(const RunConfig& cfg, std::ostream& out) {
    const Market m = load_market(cfg.input, cfg);
    const ArbitrageReport rep = find_arbitrage(m);
    Json strategies = Json::array();
    for (const ArbitrageStrategy& s : rep.strategies) {
        Json j = to_json(s);
        j["payoffs_nonnegative"] = payoffs_nonnegative(s, m.tolerance * m.spot);
        strategies.push_back(j);
    }
    Json doc = {{"command", "arbitrage"}, {"report", to_json(rep.conditions)}, {"strategies", strategies}};
    emit(out, cfg, doc, [&] {
        print_report_text(out, rep.conditions);
        for (const ArbitrageStrategy& s : rep.strategies)
            print_strategy_text(out, s);
    });
    return rep.conditions.passed ? exit_code::ok : exit_code::violations;
}

struct PipelineOutcome {
    BuildResult build;
    MartingaleReport martingale;
    RepriceReport reprice;
    bool ok() const { return martingale.passed && reprice.passed; }
};

PipelineOutcome pipeline(const Market& m) {
    PipelineOutcome o{build_model(m), {}, {}};
    o.martingale = martingale_check(o.build.model);
    o.reprice = reprice_report(o.build.model, m);
    return o;
}

int cmd_build(const RunConfig& cfg, std::ostream& out) {
    const Market m = load_market(cfg.input, cfg);
    const PipelineOutcome o = pipeline(m);
    if (!cfg.output.empty())
        write_json_file(cfg.output, model_to_json(o.build.model));
    Json doc = {{"command", "build"},
                {"stats", to_json(o.build.stats)},
                {"martingale", to_json(o.martingale)},
                {"reprice", to_json(o.reprice)}};
    if (cfg.output.empty())
        doc["model"] = model_to_json(o.build.model);
    emit(out, cfg, doc, [&] {
        out << "nodes " << o.build.model.size() << ", splits " << o.build.stats.splits << " (bound "
            << 2 * o.build.stats.regular_pieces + 1 << ")\n";
        out << "martingale max residual " << num(o.martingale.max_residual) << '\n';
        out << "max reprice error " << num(o.reprice.max_error) << (o.reprice.passed ? " ok" : " FAILED") << '\n';
        if (!cfg.output.empty())
            out << "model written to " << cfg.output << '\n';
    });
    return o.ok() ? exit_code::ok : exit_code::violations;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
    if (cfg.input.empty())
        throw InputError("--input (model file) is required for verify");
    const TreeModel model = model_from_json(read_json_file(cfg.input));
    const MartingaleReport mart = martingale_check(model);
    std::vector<double> strikes;
    for (const TreeNode& n : model.nodes())
        strikes.push_back(n.price);
    std::optional<RepriceReport> rep;
    if (!cfg.market.empty()) {
        const Market m = load_market(cfg.market, cfg);
        rep = reprice_report(model, m);
        for (const Quote& q : m.american)
            strikes.push_back(q.strike);
    }
    const MonotonicityReport mono = exercise_monotonicity(model, strikes);
    Json doc = {{"command", "verify"},
                {"martingale", to_json(mart)},
                {"exercise_monotonicity", {{"passed", mono.passed}, {"node", mono.node}, {"strike", mono.strike}}}};
    if (rep)
        doc["reprice"] = to_json(*rep);
    emit(out, cfg, doc, [&] {
        out << "martingale " << (mart.passed ? "ok" : "FAILED") << " (max residual " << num(mart.max_residual)
            << ")\n";
        out << "exercise monotonicity " << (mono.passed ? "ok" : "FAILED") << '\n';
        if (rep)
            out << "max reprice error " << num(rep->max_error) << (rep->passed ? " ok" : " FAILED") << '\n';
    });
    const bool ok = mart.passed && mono.passed && (!rep || rep->passed);
    return ok ? exit_code::ok : exit_code::violations;
}

int cmd_roundtrip(const RunConfig& cfg, std::ostream& out) {
    OracleResult oracle = random_model_oracle(cfg.seed, cfg.depth, cfg.branching);
    if (cfg.tolerance)
        oracle.market.tolerance = *cfg.tolerance;
    const ConditionReport checks = analyze_market(oracle.market).report;
    const PipelineOutcome o = pipeline(oracle.market);
    Json doc = {{"command", "roundtrip"},
                {"seed", cfg.seed},
                {"market", market_to_json(oracle.market)},
                {"checks", to_json(checks)},
                {"stats", to_json(o.build.stats)},
                {"martingale", to_json(o.martingale)},
                {"max_reprice_error", o.reprice.max_error}};
    emit(out, cfg, doc, [&] {
        out << "seed " << cfg.seed << ": " << oracle.market.european.size() << " European and "
            << oracle.market.american.size() << " American quotes\n";
        out << "conditions " << (checks.passed ? "passed" : "FAILED") << '\n';
        out << "splits " << o.build.stats.splits << ", martingale max residual " << num(o.martingale.max_residual)
            << '\n';
        out << "max reprice error " << num(o.reprice.max_error) << '\n';
    });
    return checks.passed && o.ok() ? exit_code::ok : exit_code::violations;
}

Market worked_market() {
    Market m;
    m.spot = 1.0;
    m.rate = std::log(2.0);
    m.maturity = 1.0;
    m.european = {{1.0, 0.0}, {2.0, 0.125}, {3.0, 0.5}};
    m.american = {{0.6, 0.0}, {1.0, 0.1}};
    return m;
}

int cmd_demo(const RunConfig& cfg, std::ostream& out) {
    Market m = worked_market();
    if (cfg.tolerance)
        m.tolerance = *cfg.tolerance;
    const MarketCurves mc = analyze_market(m);
    const PipelineOutcome o = pipeline(m);
    const SplitResult& s = o.build.splits.front();
    Json doc = {{"command", "demo"},
                {"market", market_to_json(m)},
                {"checks", to_json(mc.report)},
                {"critical_time", s.t_crit},
                {"critical_strike", s.k_crit},
                {"p_down", s.p_down},
                {"s_down", s.s_down},
                {"s_up", s.s_up},
                {"model", model_to_json(o.build.model)},
                {"reprice", to_json(o.reprice)}};
    emit(out, cfg, doc, [&] {
        out << "Market: S0 = 1, r = ln 2, T = 1\n";
        out << "  European quotes (1, 0) (2, 0.125) (3, 0.5): terminal law 1/4 at 1, 1/2 at 2, 1/4 at 3\n";
        out << "  American quotes (0.6, 0) (1, 0.1), i.e. A = max{0, 0.25 (K - 0.6), K - 1}\n";
        out << "Condition checks: " << (mc.report.passed ? "passed" : "FAILED") << '\n';
        out << "The upper bound E(2^(1-t) K) first touches the piece 0.25 (K - 0.6):\n";
        out << "  critical time t* = " << num(s.t_crit) << " (log2 1.1)\n";
        out << "  critical strike K* = " << num(s.k_crit) << '\n';
        out << "At t* the price jumps down to " << num(s.s_down) << " with probability " << num(s.p_down)
            << ", up to " << num(s.s_up) << " otherwise.\n";
        out << "Both sub-pictures are terminal and jump to their share of the law at T.\n";
        out << "Tree (" << o.build.model.size() << " nodes):\n";
        for (const TreeNode& n : o.build.model.nodes())
            out << "  node " << n.id << " parent " << n.parent << " t=" << num(n.time) << " S=" << num(n.price)
                << " p=" << num(n.prob) << '\n';
        out << "Repricing:\n";
        for (const QuoteError& q : o.reprice.quotes)
            out << "  " << (q.american ? "American" : "European") << " K=" << num(q.strike) << " quoted "
                << num(q.quoted) << " model " << num(q.model) << '\n';
        out << "max reprice error " << num(o.reprice.max_error) << '\n';
    });
    return o.ok() ? exit_code::ok : exit_code::violations;
}

} // namespace

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        if (cfg.tolerance && !(*cfg.tolerance > 0.0))
            throw InputError("--tolerance must be positive");
        switch (cfg.command) {
        case Command::Check: return cmd_check(cfg, out);
        case Command::Arbitrage: return cmd_arbitrage(cfg, out);
        case Command::Build: return cmd_build(cfg, out);
        case Command::Verify: return cmd_verify(cfg, out);
        case Command::Roundtrip: return cmd_roundtrip(cfg, out);
        case Command::Demo: return cmd_demo(cfg, out);
        }
        return exit_code::internal_error;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return exit_code::input_error;
    } catch (const InconsistencyError& e) {
        err << "inconsistent quotes: " << e.what() << '\n';
        return exit_code::violations;
    } catch (const InternalError& e) {
        err << "internal error: " << e.what() << '\n';
        return exit_code::internal_error;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return exit_code::internal_error;
    }
}

int cli_main(int argc, char** argv) {
    CLI::App app{"Consistency checks, arbitrage and model construction for American and European put quotes"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::string format = "json";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--tolerance", cfg.tolerance, "absolute tolerance on spot-normalized prices");
        sub->add_option("--format", format, "report format")->check(CLI::IsMember({"json", "text"}));
    };
    auto* check = app.add_subcommand("check", "run every no-arbitrage condition");
    auto* arb = app.add_subcommand("arbitrage", "build a strategy for each violated condition");
    auto* build = app.add_subcommand("build", "construct a martingale tree that reprices the quotes");
    auto* verify = app.add_subcommand("verify", "audit a model file");
    auto* round = app.add_subcommand("roundtrip", "random model -> quotes -> rebuilt model -> repricing");
    auto* demo = app.add_subcommand("demo", "worked example with commentary");
    for (CLI::App* sub : {check, arb, build, verify})
        sub->add_option("--input", cfg.input, "input file")->required();
    for (CLI::App* sub : {check, arb, build, verify, round, demo}) {
        add_common(sub);
        sub->add_option("--output", cfg.output, "output file");
    }
    verify->add_option("--market", cfg.market, "market file whose quotes the model should reprice");
    round->add_option("--seed", cfg.seed, "oracle seed");
    round->add_option("--depth", cfg.depth, "oracle tree depth")->check(CLI::Range(1, 6));
    round->add_option("--branching", cfg.branching, "oracle branching")->check(CLI::Range(2, 4));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code::input_error;
    }
    cfg.format = format == "text" ? Format::Text : Format::Json;
    if (check->parsed())
        cfg.command = Command::Check;
    else if (arb->parsed())
        cfg.command = Command::Arbitrage;
    else if (build->parsed())
        cfg.command = Command::Build;
    else if (verify->parsed())
        cfg.command = Command::Verify;
    else if (round->parsed())
        cfg.command = Command::Roundtrip;
    else
        cfg.command = Command::Demo;

    // build writes the model to --output; other commands write their report there
    if (!cfg.output.empty() && cfg.command != Command::Build) {
        std::ofstream file(cfg.output);
        if (!file) {
            std::cerr << "input error: cannot write " << cfg.output << '\n';
            return exit_code::input_error;
        }
        return run(cfg, file, std::cerr);
    }
    return run(cfg, std::cout, std::cerr);
}

} // namespace amerput
