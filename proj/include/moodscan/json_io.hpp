#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "moodscan/analytics.hpp"
#include "moodscan/core.hpp"
#include "moodscan/eval.hpp"
#include "moodscan/parser.hpp"

namespace moodscan {

using Json = nlohmann::ordered_json;

// Eight snake_case keys in canonical order with boolean values.
Json labels_to_json(const EmotionLabelSet& labels);
EmotionLabelSet labels_from_json(const Json& j);  // strict: canonical keys, booleans

Json classification_to_json(const Classification& c);
Classification classification_from_json(const Json& j);

Json failure_to_json(const FailureRecord& f);
FailureRecord failure_from_json(const Json& j);

Json eval_report_to_json(const EvalReport& r);

// Compact single-line dump used for every line-delimited file.
std::string dump_line(const Json& j);

}  // namespace moodscan
