#include "finsent/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "finsent/common.hpp"
#include "finsent/kernels.hpp"

namespace finsent::eval {

using nlohmann::ordered_json;

double cosine_similarity(const std::vector<double>& predicted,
                         const std::vector<double>& gold) {
    if (predicted.empty()) throw std::invalid_argument("cosine_similarity: empty vectors");
    if (predicted.size() != gold.size()) {
        throw std::invalid_argument("cosine_similarity: length mismatch " +
                                    std::to_string(predicted.size()) + " vs " +
                                    std::to_string(gold.size()));
    }
    const std::size_t n = predicted.size();
    const double pp = kern::dot(predicted.data(), predicted.data(), n);
    const double gg = kern::dot(gold.data(), gold.data(), n);
    if (pp == 0.0 || gg == 0.0) {
        log::warn("cosine_similarity: zero-norm vector, scoring 0 by convention");
        return 0.0;
    }
    return kern::dot(predicted.data(), gold.data(), n) / (std::sqrt(pp) * std::sqrt(gg));
}

double clamp_score(double v) { return std::min(1.0, std::max(-1.0, v)); }

namespace {

ordered_json attention_to_json(const model::AttentionRecord& a) {
    ordered_json j;
    j["tokens"] = a.tokens;
    j["sentence_weights"] = a.sentence_weights;
    j["term_labels"] = a.term_labels;
    j["term_weights"] = a.term_weights;
    return j;
}

model::AttentionRecord attention_from_json(const ordered_json& j) {
    model::AttentionRecord a;
    a.tokens = j.at("tokens").get<std::vector<std::string>>();
    a.sentence_weights = j.at("sentence_weights").get<std::vector<double>>();
    a.term_labels = j.at("term_labels").get<std::vector<std::vector<std::string>>>();
    a.term_weights = j.at("term_weights").get<std::vector<std::vector<double>>>();
    return a;
}

}  // namespace

std::string record_to_json_line(const PredictionRecord& r) {
    // fixed key order + fixed float formatting = byte-stable output
    ordered_json j;
    j["id"] = r.id;
    j["gold"] = ordered_json::parse(fmt_double(r.gold));
    ordered_json preds;
    for (const auto& [name, value] : r.model_predictions) {
        preds[name] = ordered_json::parse(fmt_double(value));
    }
    j["model_predictions"] = preds;
    j["final_prediction"] = ordered_json::parse(fmt_double(r.final_prediction));
    if (r.attention) j["attention"] = attention_to_json(*r.attention);
    return j.dump();
}

PredictionRecord record_from_json_line(const std::string& line, const std::string& where) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const ordered_json::exception& e) {
        throw ValidationError(where + ": malformed record: " + e.what());
    }
    PredictionRecord r;
    try {
        r.id = j.at("id").get<std::string>();
        r.gold = j.at("gold").get<double>();
        if (j.contains("model_predictions")) {
            for (const auto& [name, value] : j["model_predictions"].items()) {
                r.model_predictions[name] = value.get<double>();
            }
        }
        r.final_prediction = j.at("final_prediction").get<double>();
        if (j.contains("attention")) r.attention = attention_from_json(j["attention"]);
    } catch (const ordered_json::exception& e) {
        throw ValidationError(where + ": bad record fields: " + e.what());
    }
    return r;
}

void write_records(const std::string& path, const std::vector<PredictionRecord>& records) {
    std::ostringstream os;
    for (const auto& r : records) os << record_to_json_line(r) << "\n";
    io::atomic_write(path, os.str());
}

std::vector<PredictionRecord> read_records(const std::string& path) {
    std::vector<PredictionRecord> out;
    std::size_t lineno = 0;
    for (const auto& line : io::read_lines(path)) {
        ++lineno;
        if (str::trim(line).empty()) continue;
        out.push_back(record_from_json_line(line, path + ":" + std::to_string(lineno)));
    }
    return out;
}

std::vector<std::string> flag_polarity_errors(const std::vector<PredictionRecord>& records,
                                              double threshold) {
    std::vector<const PredictionRecord*> flagged;
    for (const auto& r : records) {
        if (std::fabs(r.gold) >= threshold && r.gold * r.final_prediction < 0.0) {
            flagged.push_back(&r);
        }
    }
    std::sort(flagged.begin(), flagged.end(),
              [](const PredictionRecord* a, const PredictionRecord* b) {
                  const double ga = std::fabs(a->gold - a->final_prediction);
                  const double gb = std::fabs(b->gold - b->final_prediction);
                  if (ga != gb) return ga > gb;
                  return a->id < b->id;
              });
    std::vector<std::string> ids;
    for (const auto* r : flagged) ids.push_back(r->id);
    return ids;
}

std::string emit_error_report(const std::vector<PredictionRecord>& records,
                              double threshold) {
    const auto flagged_ids = flag_polarity_errors(records, threshold);
    std::map<std::string, const PredictionRecord*> by_id;
    for (const auto& r : records) by_id[r.id] = &r;

    std::ostringstream os;
    os << "opposite-polarity predictions (|gold| >= " << fmt_double(threshold) << ")\n";
    os << "flagged " << flagged_ids.size() << " of " << records.size() << " records\n";
    for (const auto& id : flagged_ids) {
        const auto* r = by_id.at(id);
        os << "id=" << r->id << " gold=" << fmt_double(r->gold)
           << " predicted=" << fmt_double(r->final_prediction)
           << " gap=" << fmt_double(std::fabs(r->gold - r->final_prediction)) << "\n";
    }
    return os.str();
}

std::string emit_attention_report(const std::vector<PredictionRecord>& records) {
    std::ostringstream os;
    os << "attention report\n";
    bool any = false;
    for (const auto& r : records) {
        if (!r.attention) continue;
        any = true;
        const auto& a = *r.attention;
        os << "sentence id=" << r.id << " gold=" << fmt_double(r.gold)
           << " predicted=" << fmt_double(r.final_prediction) << "\n";
        for (std::size_t t = 0; t < a.tokens.size(); ++t) {
            os << "  token " << a.tokens[t];
            if (t < a.sentence_weights.size()) {
                os << " weight=" << fmt_double(a.sentence_weights[t]);
            }
            os << "\n";
            if (t < a.term_weights.size()) {
                for (std::size_t i = 0; i < a.term_weights[t].size(); ++i) {
                    os << "    term " << a.term_labels[t][i]
                       << " weight=" << fmt_double(a.term_weights[t][i]) << "\n";
                }
            }
        }
    }
    if (!any) {
        os << "no attention weights in these records (feature-based model predictions "
              "carry none)\n";
    }
    return os.str();
}

}  // namespace finsent::eval
