#pragma once

#include "sgqif/screen.hpp"
#include "sgqif/simgen.hpp"
#include "sgqif/tuning.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace sgqif {

using Json = nlohmann::json;

// Shortest text that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view text);

// Long format: header subject,time,y,e1..eq,x1..xp, one row per observed
// (subject, time). Subjects are written 1..n and times 1..k; absent rows are
// missing time points.
void write_dataset_csv(std::ostream& out, const LongitudinalDataset& data);

// Subjects are numbered in order of first appearance; the distinct time
// labels, sorted, define the k time points. Genetic values must agree across
// a subject's rows.
LongitudinalDataset read_dataset_csv(std::istream& in);

void write_dataset_csv(const std::filesystem::path& path, const LongitudinalDataset& data);
LongitudinalDataset read_dataset_csv(const std::filesystem::path& path);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& value);
void write_text(const std::filesystem::path& path, std::string_view text);

void to_json(Json& j, const ScenarioConfig& c);
void from_json(const Json& j, ScenarioConfig& c);
void to_json(Json& j, const PenaltySpec& s);
void from_json(const Json& j, PenaltySpec& s);
void to_json(Json& j, const TuningGrid& g);
void from_json(const Json& j, TuningGrid& g);
void to_json(Json& j, const Selection& s);
void to_json(Json& j, const FitResult& f);
void to_json(Json& j, const GridCell& c);
void to_json(Json& j, const GridReport& r);
void to_json(Json& j, const CvReport& r);
void to_json(Json& j, const MetricsReport& m);
void to_json(Json& j, const ScreenReport& r);

// Truth sidecar: beta_true, support sets and the generating config.
Json truth_json(const SimulatedTruth& truth, const ScenarioConfig& config, std::uint64_t replicate);
Vector beta_from_json(const Json& j);

}  // namespace sgqif
