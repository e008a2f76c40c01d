#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "finsent/common.hpp"

namespace finsent::corpus {

enum class Track { microblog, news };

const char* track_name(Track t);
Track parse_track(const std::string& name);  // throws ValidationError

struct SentimentInstance {
    std::string id;
    std::string text;
    double score = 0.0;  // in [-1, +1]
    Track track = Track::microblog;

    bool operator==(const SentimentInstance&) const = default;
};

struct TokenSequence {
    std::vector<std::string> tokens;
};

// Rule-based tokenizer (the corpora's papers never pin one down, so the
// rules here are the documented contract):
//   - lowercase everything
//   - URLs (http://, https://, www.) become the sentinel token "<url>",
//     which itself tokenizes to itself
//   - cashtags ($aapl) and @mentions stay single tokens
//   - runs of letters/digits are tokens; every other character is a
//     single-character token
// Deterministic and idempotent on its own output. Throws ValidationError
// on text that is empty after trimming.
TokenSequence tokenize(const std::string& text);

// Canonical dataset format: one JSON object per line with fields
// {"id": str, "text": str, "score": number in [-1,1], "track": str}.
// "semeval" accepts a JSON array of objects in the shared-task source
// shape (text under "text", "spans" or "title"; score under "score",
// "sentiment score" or "sentiment").
enum class DatasetFormat { canonical, semeval };

std::vector<SentimentInstance> load_dataset(const std::string& path, Track track,
                                            DatasetFormat format = DatasetFormat::canonical);

void save_dataset(const std::string& path, const std::vector<SentimentInstance>& data);

struct EmbeddingTable {
    std::size_t dimension = 0;
    std::unordered_map<std::string, std::vector<double>> entries;

    const std::vector<double>* find(const std::string& token) const {
        auto it = entries.find(token);
        return it == entries.end() ? nullptr : &it->second;
    }
};

// Text format: one entry per line, token followed by whitespace-separated
// values. Dimension fixed by the first line; later mismatches are errors
// naming the line. Duplicate tokens: first wins, warning emitted.
EmbeddingTable load_embeddings(const std::string& path);

struct DtEntry {
    std::string target;
    double similarity;
};

// token -> expansion targets, sorted by descending similarity with ties
// broken lexicographically; self-expansions dropped.
struct DtTable {
    std::unordered_map<std::string, std::vector<DtEntry>> entries;

    const std::vector<DtEntry>* find(const std::string& token) const {
        auto it = entries.find(token);
        return it == entries.end() ? nullptr : &it->second;
    }
};

// Text format: word <TAB> target <TAB> similarity, one expansion per line.
DtTable load_dt_table(const std::string& path);

struct Lexicon {
    std::string name;
    std::unordered_set<std::string> positive;
    std::unordered_set<std::string> negative;
    // raw scores for valence-style lexicons (thresholded at 0 into the
    // polarity sets: > 0 positive, < 0 negative)
    std::unordered_map<std::string, double> valence;
    bool valence_backed = false;
};

struct LexiconSet {
    std::vector<Lexicon> lexicons;
};

// Word-list lexicon: one token per line in each polarity file. A token in
// both files is kept in both, with a warning.
Lexicon load_polarity_lexicon(const std::string& name, const std::string& positive_path,
                              const std::string& negative_path);

// Valence lexicon: token <TAB> score per line.
Lexicon load_valence_lexicon(const std::string& name, const std::string& path);

struct LexiconSpec {
    std::string name;
    std::string kind;  // "polarity" | "valence"
    std::string path;            // valence file
    std::string positive_path;   // polarity files
    std::string negative_path;
};

LexiconSet load_lexicons(const std::vector<LexiconSpec>& specs);

}  // namespace finsent::corpus
