#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "grouprl/trainer.hpp"

namespace grouprl {

// Metric field names in schema order. Every StepMetrics field appears once.
const std::vector<std::string>& metric_field_names();

// One JSON object per line; doubles are written with round-trip precision.
std::string to_json_line(const StepMetrics& metrics);
StepMetrics from_json_line(const std::string& line);

void write_jsonl(std::ostream& out, const StepMetrics& metrics);
std::vector<StepMetrics> read_jsonl(std::istream& in);

// Flattens a JSONL metrics stream into CSV with a header row in schema order.
// Numbers use the shortest decimal form that parses back to the same double.
void export_csv(std::istream& jsonl, std::ostream& csv);

// Shortest round-trip decimal representation.
std::string format_shortest(double value);

}  // namespace grouprl
