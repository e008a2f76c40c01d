#include "finsent/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <json.hpp>

namespace finsent::corpus {

using nlohmann::json;

const char* track_name(Track t) {
    return t == Track::microblog ? "microblog" : "news";
}

Track parse_track(const std::string& name) {
    if (name == "microblog") return Track::microblog;
    if (name == "news") return Track::news;
    throw ValidationError("unknown track '" + name + "' (expected microblog|news)");
}

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool is_url(const std::string& chunk) {
    return str::starts_with(chunk, "http://") || str::starts_with(chunk, "https://") ||
           str::starts_with(chunk, "www.");
}

constexpr const char* kUrlSentinel = "<url>";

}  // namespace

TokenSequence tokenize(const std::string& text) {
    const std::string trimmed = str::trim(text);
    if (trimmed.empty()) throw ValidationError("tokenize: empty text");
    TokenSequence seq;
    for (const std::string& raw : str::split_ws(trimmed)) {
        const std::string chunk = str::lower(raw);
        if (chunk == kUrlSentinel || is_url(chunk)) {
            seq.tokens.push_back(kUrlSentinel);
            continue;
        }
        std::size_t i = 0;
        while (i < chunk.size()) {
            const char c = chunk[i];
            if ((c == '$' || c == '@') && i + 1 < chunk.size() && is_alnum(chunk[i + 1])) {
                std::size_t j = i + 1;
                while (j < chunk.size() && is_alnum(chunk[j])) ++j;
                seq.tokens.push_back(chunk.substr(i, j - i));
                i = j;
            } else if (is_alnum(c)) {
                std::size_t j = i;
                while (j < chunk.size() && is_alnum(chunk[j])) ++j;
                seq.tokens.push_back(chunk.substr(i, j - i));
                i = j;
            } else {
                seq.tokens.push_back(std::string(1, c));
                ++i;
            }
        }
    }
    return seq;
}

namespace {

SentimentInstance instance_from_json(const json& j, Track default_track,
                                     const std::string& where) {
    SentimentInstance inst;
    if (j.contains("id")) {
        inst.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    } else {
        throw ValidationError(where + ": record missing 'id'");
    }

    if (j.contains("text") && j["text"].is_string()) {
        inst.text = j["text"].get<std::string>();
    } else if (j.contains("spans") && j["spans"].is_array()) {
        std::string joined;
        for (const auto& s : j["spans"]) {
            if (!joined.empty()) joined += " ";
            joined += s.get<std::string>();
        }
        inst.text = joined;
    } else if (j.contains("title") && j["title"].is_string()) {
        inst.text = j["title"].get<std::string>();
    } else {
        throw ValidationError(where + ": record missing text ('text'/'spans'/'title')");
    }
    if (str::trim(inst.text).empty()) {
        throw ValidationError(where + ": empty text");
    }

    const char* score_keys[] = {"score", "sentiment score", "sentiment", "sentiment_score"};
    bool found = false;
    for (const char* key : score_keys) {
        if (j.contains(key)) {
            const auto& v = j[key];
            if (v.is_number()) {
                inst.score = v.get<double>();
            } else if (v.is_string()) {
                try {
                    inst.score = std::stod(v.get<std::string>());
                } catch (const std::exception&) {
                    throw ValidationError(where + ": unparseable score '" +
                                          v.get<std::string>() + "'");
                }
            } else {
                continue;
            }
            found = true;
            break;
        }
    }
    if (!found) throw ValidationError(where + ": record missing score");
    if (inst.score < -1.0 || inst.score > 1.0) {
        throw ValidationError(where + ": score " + fmt_double(inst.score) +
                              " outside [-1, 1]");
    }

    inst.track = j.contains("track") ? parse_track(j["track"].get<std::string>())
                                     : default_track;
    return inst;
}

}  // namespace

std::vector<SentimentInstance> load_dataset(const std::string& path, Track track,
                                            DatasetFormat format) {
    std::vector<SentimentInstance> out;
    if (format == DatasetFormat::canonical) {
        const auto lines = io::read_lines(path);
        std::size_t lineno = 0;
        for (const auto& line : lines) {
            ++lineno;
            if (str::trim(line).empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception& e) {
                throw ValidationError(path + ":" + std::to_string(lineno) +
                                      ": malformed record: " + e.what());
            }
            out.push_back(
                instance_from_json(j, track, path + ":" + std::to_string(lineno)));
        }
    } else {
        json root;
        try {
            root = json::parse(io::read_file(path));
        } catch (const json::exception& e) {
            throw ValidationError(path + ": malformed JSON: " + e.what());
        }
        if (!root.is_array()) throw ValidationError(path + ": expected a JSON array");
        std::size_t idx = 0;
        for (const auto& j : root) {
            out.push_back(
                instance_from_json(j, track, path + "[" + std::to_string(idx) + "]"));
            ++idx;
        }
    }
    if (out.empty()) log::warn(path + ": dataset is empty");
    log::info(path + ": loaded " + std::to_string(out.size()) + " instances");
    return out;
}

void save_dataset(const std::string& path, const std::vector<SentimentInstance>& data) {
    std::ostringstream os;
    for (const auto& inst : data) {
        json j;
        j["id"] = inst.id;
        j["text"] = inst.text;
        j["score"] = inst.score;
        j["track"] = track_name(inst.track);
        os << j.dump() << "\n";
    }
    io::atomic_write(path, os.str());
}

EmbeddingTable load_embeddings(const std::string& path) {
    EmbeddingTable table;
    const auto lines = io::read_lines(path);
    std::size_t lineno = 0;
    for (const auto& line : lines) {
        ++lineno;
        if (str::trim(line).empty()) continue;
        const auto parts = str::split_ws(line);
        if (parts.size() < 2) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": expected token followed by values");
        }
        // word2vec text headers ("<count> <dim>") are skipped
        if (lineno == 1 && parts.size() == 2) {
            bool numeric = true;
            for (const auto& p : parts) {
                try {
                    (void)std::stod(p);
                } catch (const std::exception&) {
                    numeric = false;
                }
            }
            if (numeric) continue;
        }
        std::vector<double> vec;
        vec.reserve(parts.size() - 1);
        for (std::size_t i = 1; i < parts.size(); ++i) {
            try {
                vec.push_back(std::stod(parts[i]));
            } catch (const std::exception&) {
                throw ValidationError(path + ":" + std::to_string(lineno) +
                                      ": unparseable value '" + parts[i] + "'");
            }
        }
        if (table.dimension == 0) {
            table.dimension = vec.size();
        } else if (vec.size() != table.dimension) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": vector length " +
                                  std::to_string(vec.size()) + " != table dimension " +
                                  std::to_string(table.dimension));
        }
        auto [it, inserted] = table.entries.emplace(parts[0], std::move(vec));
        (void)it;
        if (!inserted) {
            log::warn(path + ":" + std::to_string(lineno) + ": duplicate token '" +
                      parts[0] + "', first entry kept");
        }
    }
    if (table.entries.empty()) throw ValidationError(path + ": empty embedding table");
    log::info(path + ": loaded " + std::to_string(table.entries.size()) +
              " embeddings of dimension " + std::to_string(table.dimension));
    return table;
}

DtTable load_dt_table(const std::string& path) {
    DtTable table;
    const auto lines = io::read_lines(path);
    std::size_t lineno = 0;
    for (const auto& line : lines) {
        ++lineno;
        if (str::trim(line).empty()) continue;
        const auto parts = str::split(line, '\t');
        if (parts.size() != 3) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": expected word<TAB>target<TAB>similarity");
        }
        const std::string word = str::lower(str::trim(parts[0]));
        const std::string target = str::lower(str::trim(parts[1]));
        double sim = 0.0;
        try {
            sim = std::stod(parts[2]);
        } catch (const std::exception&) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": unparseable similarity '" + parts[2] + "'");
        }
        if (word == target) continue;  // no self-expansion
        table.entries[word].push_back({target, sim});
    }
    for (auto& [word, targets] : table.entries) {
        std::sort(targets.begin(), targets.end(), [](const DtEntry& a, const DtEntry& b) {
            if (a.similarity != b.similarity) return a.similarity > b.similarity;
            return a.target < b.target;
        });
    }
    log::info(path + ": loaded expansions for " + std::to_string(table.entries.size()) +
              " words");
    return table;
}

Lexicon load_polarity_lexicon(const std::string& name, const std::string& positive_path,
                              const std::string& negative_path) {
    Lexicon lex;
    lex.name = name;
    for (const auto& line : io::read_lines(positive_path)) {
        const std::string tok = str::lower(str::trim(line));
        if (!tok.empty() && tok[0] != ';') lex.positive.insert(tok);
    }
    for (const auto& line : io::read_lines(negative_path)) {
        const std::string tok = str::lower(str::trim(line));
        if (tok.empty() || tok[0] == ';') continue;
        if (lex.positive.count(tok)) {
            log::warn(name + ": token '" + tok + "' is in both polarity lists, kept in both");
        }
        lex.negative.insert(tok);
    }
    if (lex.positive.empty() && lex.negative.empty()) {
        throw ValidationError(name + ": empty lexicon");
    }
    return lex;
}

Lexicon load_valence_lexicon(const std::string& name, const std::string& path) {
    Lexicon lex;
    lex.name = name;
    lex.valence_backed = true;
    std::size_t lineno = 0;
    for (const auto& line : io::read_lines(path)) {
        ++lineno;
        if (str::trim(line).empty()) continue;
        const auto parts = str::split(line, '\t');
        if (parts.size() < 2) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": expected token<TAB>score");
        }
        const std::string tok = str::lower(str::trim(parts[0]));
        double score = 0.0;
        try {
            score = std::stod(parts[1]);
        } catch (const std::exception&) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": unparseable valence '" + parts[1] + "'");
        }
        lex.valence[tok] = score;
        if (score > 0.0) lex.positive.insert(tok);
        if (score < 0.0) lex.negative.insert(tok);
    }
    if (lex.valence.empty()) throw ValidationError(name + ": empty lexicon");
    return lex;
}

LexiconSet load_lexicons(const std::vector<LexiconSpec>& specs) {
    LexiconSet set;
    for (const auto& spec : specs) {
        if (spec.kind == "polarity") {
            set.lexicons.push_back(
                load_polarity_lexicon(spec.name, spec.positive_path, spec.negative_path));
        } else if (spec.kind == "valence") {
            set.lexicons.push_back(load_valence_lexicon(spec.name, spec.path));
        } else {
            throw ValidationError("lexicon '" + spec.name + "': unknown kind '" +
                                  spec.kind + "' (expected polarity|valence)");
        }
        const auto& lex = set.lexicons.back();
        log::info("lexicon " + lex.name + ": " + std::to_string(lex.positive.size()) +
                  " positive, " + std::to_string(lex.negative.size()) + " negative");
    }
    return set;
}

}  // namespace finsent::corpus
