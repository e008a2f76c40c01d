#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finsent/model.hpp"

namespace finsent::eval {

// dot(p,g) / (||p|| * ||g||). Throws on empty or mismatched lengths; a
// zero-norm side scores 0 with a warning (degenerate by convention).
double cosine_similarity(const std::vector<double>& predicted,
                         const std::vector<double>& gold);

double clamp_score(double v);  // into [-1, 1]

// One scored instance. Serialized as one JSON object per line; keys are
// emitted in a fixed order and numbers with fixed precision, so identical
// runs produce byte-identical files.
struct PredictionRecord {
    std::string id;
    double gold = 0.0;
    std::map<std::string, double> model_predictions;  // raw, per component
    double final_prediction = 0.0;                    // clamped to [-1, 1]
    std::optional<model::AttentionRecord> attention;
};

std::string record_to_json_line(const PredictionRecord& r);
PredictionRecord record_from_json_line(const std::string& line, const std::string& where);

void write_records(const std::string& path, const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> read_records(const std::string& path);

// Opposite-polarity report: flags records with sign(final) opposite to
// sign(gold) and |gold| >= threshold, sorted by |gold - final| descending.
std::string emit_error_report(const std::vector<PredictionRecord>& records,
                              double threshold);

// Returns the ids flagged by the same rule, in report order (for tests and
// programmatic use).
std::vector<std::string> flag_polarity_errors(const std::vector<PredictionRecord>& records,
                                              double threshold);

// Per sentence: tokens with their sentence-attention weight; per token the
// relevant terms with their word-attention weights. Records without
// attention (feature-based models) yield a notice and an empty body.
std::string emit_attention_report(const std::vector<PredictionRecord>& records);

}  // namespace finsent::eval
