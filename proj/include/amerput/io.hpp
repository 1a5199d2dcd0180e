#pragma once

#include "amerput/arbitrage.hpp"
#include "amerput/conditions.hpp"
#include "amerput/construction.hpp"
#include "amerput/curves.hpp"
#include "amerput/tree.hpp"
#include "amerput/verify.hpp"

#include <json.hpp>

#include <string>

namespace amerput {

using Json = nlohmann::ordered_json;

/// Parses {spot, rate, maturity, european:[{strike, price}], american:[...], tolerance?}.
/// `default_tolerance` applies when the document has no tolerance field.
Market market_from_json(const Json& doc, double default_tolerance = kDefaultTolerance);
Json market_to_json(const Market& market);

/// {rate, maturity, nodes:[{id, time, price, parent, prob}]}
TreeModel model_from_json(const Json& doc);
Json model_to_json(const TreeModel& model);

Json to_json(const ConditionReport& report);
Json to_json(const ArbitrageStrategy& strategy);
Json to_json(const StrategyCheck& check);
Json to_json(const MartingaleReport& report);
Json to_json(const RepriceReport& report);
Json to_json(const BuildStats& stats);

/// Reads a whole file as JSON; throws InputError when unreadable or malformed.
Json read_json_file(const std::string& path);
/// Writes with 2-space indentation and a trailing newline.
void write_json_file(const std::string& path, const Json& doc);

} // namespace amerput
