#include "amerput/io.hpp"

#include "amerput/errors.hpp"

#include <fstream>
#include <sstream>

namespace amerput {

namespace {

double number(const Json& doc, const char* key) {
    if (!doc.contains(key))
        throw InputError(std::string("missing field '") + key + "'");
    const Json& v = doc.at(key);
    if (!v.is_number())
        throw InputError(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

std::vector<Quote> quotes(const Json& doc, const char* key) {
    std::vector<Quote> out;
    if (!doc.contains(key))
        return out;
    const Json& arr = doc.at(key);
    if (!arr.is_array())
        throw InputError(std::string("field '") + key + "' must be an array");
    for (const Json& q : arr) {
        if (!q.is_object())
            throw InputError(std::string("entries of '") + key + "' must be objects");
        out.push_back({number(q, "strike"), number(q, "price")});
    }
    return out;
}

Json quotes_json(const std::vector<Quote>& qs) {
    Json arr = Json::array();
    for (const Quote& q : qs)
        arr.push_back({{"strike", q.strike}, {"price", q.price}});
    return arr;
}

Json curve_json(const PLCurve& c) {
    Json kinks = Json::array();
    for (const Kink& k : c.kinks())
        kinks.push_back({k.strike, k.value});
    return {{"kinks", kinks}, {"left_slope", c.left_extension_slope()}, {"right_slope", c.right_extension_slope()}};
}

} // namespace

Market market_from_json(const Json& doc, double default_tolerance) {
    if (!doc.is_object())
        throw InputError("market file must hold a JSON object");
    Market m;
    m.spot = number(doc, "spot");
    m.rate = number(doc, "rate");
    m.maturity = number(doc, "maturity");
    m.european = quotes(doc, "european");
    m.american = quotes(doc, "american");
    m.tolerance = doc.contains("tolerance") ? number(doc, "tolerance") : default_tolerance;
    m.validate();
    return m;
}

Json market_to_json(const Market& m) {
    return {{"spot", m.spot},
            {"rate", m.rate},
            {"maturity", m.maturity},
            {"european", quotes_json(m.european)},
            {"american", quotes_json(m.american)},
            {"tolerance", m.tolerance}};
}

TreeModel model_from_json(const Json& doc) {
    if (!doc.is_object() || !doc.contains("nodes") || !doc.at("nodes").is_array())
        throw InputError("model file must hold an object with a 'nodes' array");
    std::vector<TreeNode> nodes;
    for (const Json& n : doc.at("nodes")) {
        if (!n.is_object())
            throw InputError("model nodes must be objects");
        TreeNode t;
        t.id = static_cast<int>(number(n, "id"));
        t.time = number(n, "time");
        t.price = number(n, "price");
        t.parent = static_cast<int>(number(n, "parent"));
        t.prob = number(n, "prob");
        nodes.push_back(t);
    }
    TreeModel m = TreeModel::from_nodes(number(doc, "rate"), number(doc, "maturity"), std::move(nodes));
    m.validate();
    return m;
}

Json model_to_json(const TreeModel& model) {
    Json nodes = Json::array();
    for (const TreeNode& n : model.nodes())
        nodes.push_back(
            {{"id", n.id}, {"time", n.time}, {"price", n.price}, {"parent", n.parent}, {"prob", n.prob}});
    return {{"rate", model.rate()}, {"maturity", model.maturity()}, {"nodes", nodes}};
}

Json to_json(const ConditionReport& report) {
    auto list = [](const std::vector<Violation>& vs) {
        Json arr = Json::array();
        for (const Violation& v : vs)
            arr.push_back({{"kind", std::string(to_string(v.kind))}, {"strikes", v.strikes}, {"magnitude", v.magnitude}});
        return arr;
    };
    return {{"passed", report.passed}, {"violations", list(report.violations)}, {"warnings", list(report.warnings)}};
}

Json to_json(const ArbitrageStrategy& s) {
    Json positions = Json::array();
    for (const Position& p : s.positions) {
        Json j = {{"instrument", std::string(to_string(p.instrument))}};
        if (p.instrument == Instrument::AmericanPut || p.instrument == Instrument::EuropeanPut)
            j["strike"] = p.strike;
        j["quantity"] = p.quantity;
        j["exercise"] = std::string(to_string(p.rule));
        positions.push_back(j);
    }
    Json cases = Json::array();
    for (const PayoffCase& c : s.payoff_cases) {
        Json j = {{"region", c.region}, {"variable", c.variable}, {"lo", c.lo}};
        j["hi"] = std::isfinite(c.hi) ? Json(c.hi) : Json("inf");
        j["payoff"] = curve_json(c.payoff);
        j["minimum"] = payoff_minimum(c);
        cases.push_back(j);
    }
    return {{"kind", std::string(to_string(s.kind))},
            {"strikes", s.strikes},
            {"initial_credit", s.initial_credit},
            {"positions", positions},
            {"payoff_cases", cases}};
}

Json to_json(const StrategyCheck& c) {
    return {{"passed", c.passed()},
            {"credit_positive", c.credit_positive},
            {"cashflows_nonnegative", c.cashflows_nonnegative},
            {"min_terminal_value", c.min_terminal_value},
            {"scenarios", c.scenarios}};
}

Json to_json(const MartingaleReport& r) {
    return {{"passed", r.passed}, {"max_residual", r.max_residual}, {"worst_node", r.worst_node}};
}

Json to_json(const RepriceReport& r) {
    Json qs = Json::array();
    for (const QuoteError& q : r.quotes)
        qs.push_back({{"family", q.american ? "american" : "european"},
                      {"strike", q.strike},
                      {"quoted", q.quoted},
                      {"model", q.model},
                      {"error", q.error}});
    return {{"passed", r.passed}, {"max_error", r.max_error}, {"quotes", qs}};
}

Json to_json(const BuildStats& s) {
    return {{"splits", s.splits}, {"regular_pieces", s.regular_pieces}, {"split_bound", 2 * s.regular_pieces + 1},
            {"max_depth", s.max_depth}};
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const Json& doc) {
    std::ofstream out(path);
    if (!out)
        throw InputError("cannot write " + path);
    out << doc.dump(2) << '\n';
}

} // namespace amerput
